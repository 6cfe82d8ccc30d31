#pragma once

// Ingestion: raw JSONL documents -> cleaned, chunked, optionally annotated
// passages.

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <future>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "archrag/backends.hpp"
#include "archrag/text/clean.hpp"

namespace archrag {

struct RawDocument {
  std::string doc_id;
  std::string title;
  std::string body;
  std::string lang;
};

/// Span offsets are code point offsets into the owning chunk's text.
struct Entity {
  std::string surface;
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Entity&) const = default;
};

struct Chunk {
  std::string chunk_id;
  std::string doc_id;
  std::string title;
  std::string text;
  std::string lang;
  std::size_t token_count = 0;
  std::vector<Entity> entities;

  bool operator==(const Chunk&) const = default;
};

struct ChunkingOptions {
  std::size_t max_tokens = 512;
  std::size_t overlap = 64;
};

struct CleaningOptions {
  bool preprocess = true;
};

struct Manifest {
  std::string source_path;
  std::string ingested_at;
  CleaningOptions cleaning;
  ChunkingOptions chunking;
  std::size_t document_count = 0;
  std::size_t dropped_entities = 0;
};

struct Corpus {
  std::vector<Chunk> chunks;
  Manifest manifest;
};

inline void to_json(json& j, const Entity& e) {
  j = {{"surface", e.surface}, {"label", e.label}, {"start", e.start}, {"end", e.end}};
}
inline void from_json(const json& j, Entity& e) {
  j.at("surface").get_to(e.surface);
  j.at("label").get_to(e.label);
  j.at("start").get_to(e.start);
  j.at("end").get_to(e.end);
}
inline void to_json(json& j, const Chunk& c) {
  j = {{"chunk_id", c.chunk_id}, {"doc_id", c.doc_id},         {"title", c.title},
       {"text", c.text},         {"lang", c.lang},             {"token_count", c.token_count},
       {"entities", c.entities}};
}
inline void from_json(const json& j, Chunk& c) {
  j.at("chunk_id").get_to(c.chunk_id);
  j.at("doc_id").get_to(c.doc_id);
  j.at("title").get_to(c.title);
  j.at("text").get_to(c.text);
  j.at("lang").get_to(c.lang);
  j.at("token_count").get_to(c.token_count);
  c.entities = j.value("entities", std::vector<Entity>{});
}
inline void to_json(json& j, const Manifest& m) {
  j = {{"source_path", m.source_path},
       {"ingested_at", m.ingested_at},
       {"cleaning", {{"preprocess", m.cleaning.preprocess}}},
       {"chunking", {{"max_tokens", m.chunking.max_tokens}, {"overlap", m.chunking.overlap}}},
       {"document_count", m.document_count},
       {"dropped_entities", m.dropped_entities}};
}

using text::preprocess_text;

/// Splits an already-cleaned body into windows of at most max_tokens
/// whitespace tokens, consecutive windows sharing `overlap` tokens.
inline std::vector<Chunk> chunk_document(const RawDocument& doc,
                                         const ChunkingOptions& opts = {}) {
  if (opts.max_tokens < 1) throw ConfigError("max_tokens must be >= 1");
  if (opts.overlap >= opts.max_tokens) throw ConfigError("overlap must be < max_tokens");
  const auto tokens = text::split_whitespace(doc.body);
  std::vector<Chunk> out;
  if (tokens.empty()) return out;
  const std::size_t stride = opts.max_tokens - opts.overlap;
  for (std::size_t begin = 0;; begin += stride) {
    const std::size_t end = std::min(begin + opts.max_tokens, tokens.size());
    std::string body;
    for (std::size_t i = begin; i < end; ++i) {
      if (i > begin) body.push_back(' ');
      body.append(tokens[i]);
    }
    out.push_back({doc.doc_id + "#" + std::to_string(out.size()), doc.doc_id, doc.title,
                   std::move(body), doc.lang, end - begin, {}});
    if (end == tokens.size()) break;
  }
  return out;
}

/// Keeps entities whose span is in range and whose surface equals the text
/// slice. Returns the number dropped.
inline std::size_t attach_entities(Chunk& chunk, const std::vector<RawEntity>& found) {
  const std::size_t len = text::length(chunk.text);
  std::size_t dropped = 0;
  chunk.entities.clear();
  for (const auto& e : found) {
    if (e.start >= e.end || e.end > len) {
      ++dropped;
      continue;
    }
    const auto range = text::byte_range(chunk.text, e.start, e.end);
    if (!range ||
        std::string_view(chunk.text).substr(range->first, range->second - range->first) !=
            e.surface) {
      ++dropped;
      continue;
    }
    chunk.entities.push_back({e.surface, e.label, e.start, e.end});
  }
  return dropped;
}

struct AnnotationResult {
  Chunk chunk;
  std::size_t dropped = 0;
};

/// A null backend means NER is disabled ("none").
inline AnnotationResult annotate_entities(Chunk chunk, const EntityBackend* ner) {
  AnnotationResult res{std::move(chunk), 0};
  if (!ner) {
    res.chunk.entities.clear();
    return res;
  }
  std::vector<std::vector<RawEntity>> found;
  try {
    found = ner->recognize({res.chunk.text}, res.chunk.lang);
  } catch (const BackendError& e) {
    throw AnnotationError(res.chunk.chunk_id, e.what());
  }
  res.dropped = attach_entities(res.chunk, found.at(0));
  return res;
}

/// Annotates every chunk, `workers` at a time, keeping corpus order. Updates
/// the manifest's dropped-entity count.
inline void annotate_corpus(Corpus& corpus, const EntityBackend* ner, std::size_t workers = 4) {
  if (!ner) {
    for (auto& c : corpus.chunks) c.entities.clear();
    return;
  }
  workers = std::max<std::size_t>(1, workers);
  std::size_t dropped = 0;
  for (std::size_t wave = 0; wave < corpus.chunks.size(); wave += workers) {
    const std::size_t end = std::min(corpus.chunks.size(), wave + workers);
    std::vector<std::future<AnnotationResult>> jobs;
    for (std::size_t i = wave; i < end; ++i)
      jobs.push_back(std::async(std::launch::async, annotate_entities, corpus.chunks[i], ner));
    for (std::size_t i = wave; i < end; ++i) {
      auto r = jobs[i - wave].get();
      dropped += r.dropped;
      corpus.chunks[i] = std::move(r.chunk);
    }
  }
  corpus.manifest.dropped_entities += dropped;
}

struct LoadOptions {
  ChunkingOptions chunking;
  CleaningOptions cleaning;
};

inline RawDocument parse_document_line(const std::string& line, std::size_t line_no) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
  RawDocument d;
  try {
    d.doc_id = j.at("doc_id").get<std::string>();
    d.title = j.value("title", std::string{});
    d.body = j.at("text").get<std::string>();
    d.lang = j.value("lang", std::string{});
  } catch (const json::exception& e) {
    throw ParseError(line_no, std::string("bad document fields: ") + e.what());
  }
  if (d.doc_id.empty()) throw ParseError(line_no, "empty doc_id");
  return d;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

/// Reads a corpus JSONL file (one document per line). Output depends only on
/// the file bytes and options, apart from the manifest timestamp.
inline Corpus load_corpus(const std::string& path, const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file '" + path + "'");
  Corpus corpus;
  corpus.manifest = {path, utc_timestamp(), opts.cleaning, opts.chunking, 0, 0};
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    RawDocument doc = parse_document_line(line, line_no);
    if (!seen.insert(doc.doc_id).second) throw DuplicateIdError(doc.doc_id);
    if (opts.cleaning.preprocess) {
      doc.title = preprocess_text(doc.title);
      doc.body = preprocess_text(doc.body);
    }
    auto chunks = chunk_document(doc, opts.chunking);
    std::move(chunks.begin(), chunks.end(), std::back_inserter(corpus.chunks));
    ++corpus.manifest.document_count;
  }
  return corpus;
}

/// One chunk object per line; byte-identical for identical corpora.
inline void save_chunks(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path + "'");
  for (const auto& c : corpus.chunks) out << json(c).dump() << '\n';
  std::ofstream m(path + ".manifest.json", std::ios::binary | std::ios::trunc);
  m << json(corpus.manifest).dump(2) << '\n';
}

inline Corpus load_chunks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open chunk file '" + path + "'");
  Corpus corpus;
  corpus.manifest.source_path = path;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      corpus.chunks.push_back(json::parse(line).get<Chunk>());
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad chunk record: ") + e.what());
    }
    if (!ids.insert(corpus.chunks.back().chunk_id).second)
      throw ParseError(line_no, "duplicate chunk_id '" + corpus.chunks.back().chunk_id + "'");
  }
  return corpus;
}

/// Loads either a serialized chunk file or a raw document JSONL file,
/// deciding from the first record.
inline Corpus load_any_corpus(const std::string& path, const LoadOptions& opts = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open corpus file '" + path + "'");
  std::string line;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    try {
      if (json::parse(line).contains("chunk_id")) return load_chunks(path);
    } catch (const json::exception&) {
    }
    break;
  }
  return load_corpus(path, opts);
}

}  // namespace archrag
