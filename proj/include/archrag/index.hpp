#pragma once

// Flat (exhaustive) dense index over corpus chunks, with a bit-exact binary
// file format and chunk metadata stored alongside the vectors.
//
// File layout, all integers little-endian:
//   "ARXI" | u16 version | u16 dim | u64 count | u32 len + provider_id
//   count x (u32 len + chunk_id | dim x f32)
//   count x (u32 len + JSON metadata record)

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "archrag/bm25.hpp"
#include "archrag/corpus.hpp"
#include "archrag/embedding.hpp"

namespace archrag {

static_assert(std::endian::native == std::endian::little,
              "index I/O assumes a little-endian host");

struct ChunkMeta {
  std::string doc_id;
  std::string title;
  std::string lang;
  std::string text;

  bool operator==(const ChunkMeta&) const = default;
};

inline void to_json(json& j, const ChunkMeta& m) {
  j = {{"doc_id", m.doc_id}, {"title", m.title}, {"lang", m.lang}, {"text", m.text}};
}
inline void from_json(const json& j, ChunkMeta& m) {
  j.at("doc_id").get_to(m.doc_id);
  j.at("title").get_to(m.title);
  j.at("lang").get_to(m.lang);
  j.at("text").get_to(m.text);
}

enum class ListSource { dense, lexical };

inline const char* to_string(ListSource s) { return s == ListSource::dense ? "dense" : "lexical"; }

struct ScoredChunk {
  std::string chunk_id;
  double score = 0.0;

  bool operator==(const ScoredChunk&) const = default;
};

/// Scores non-increasing, ties ordered by chunk_id.
struct RankedList {
  std::string query_id;
  std::vector<ScoredChunk> items;
  ListSource source = ListSource::dense;

  bool operator==(const RankedList&) const = default;
};

/// Descending score, then ascending chunk_id.
inline bool ranks_before(const ScoredChunk& a, const ScoredChunk& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.chunk_id < b.chunk_id;
}

class VectorIndex {
 public:
  inline static constexpr char kMagic[4] = {'A', 'R', 'X', 'I'};
  inline static constexpr std::uint16_t kVersion = 1;

  VectorIndex() = default;
  VectorIndex(std::string provider_id, std::size_t dim)
      : provider_id_(std::move(provider_id)), dim_(dim) {
    if (dim == 0 || dim > 0xFFFF) throw ConfigError("index dim must be in [1, 65535]");
  }

  const std::string& provider_id() const noexcept { return provider_id_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return ids_.size(); }
  bool empty() const noexcept { return ids_.empty(); }

  const std::string& chunk_id(std::size_t i) const { return ids_.at(i); }
  const ChunkMeta& meta(std::size_t i) const { return meta_.at(i); }
  std::vector<float> vector(std::size_t i) const {
    const auto* p = data_.data() + i * dim_;
    return {p, p + dim_};
  }
  bool contains(const std::string& chunk_id) const { return pos_.contains(chunk_id); }
  const ChunkMeta& meta(const std::string& chunk_id) const {
    auto it = pos_.find(chunk_id);
    if (it == pos_.end()) throw Error("unknown chunk_id '" + chunk_id + "'");
    return meta_[it->second];
  }

  void add(std::string chunk_id, const std::vector<float>& vec, ChunkMeta meta) {
    if (vec.size() != dim_) throw DimensionMismatch(dim_, vec.size());
    if (!pos_.emplace(chunk_id, ids_.size()).second)
      throw Error("duplicate chunk_id '" + chunk_id + "' in index");
    ids_.push_back(std::move(chunk_id));
    data_.insert(data_.end(), vec.begin(), vec.end());
    meta_.push_back(std::move(meta));
    lexical_.reset();
  }

  /// Exact top-K by dot product. K larger than the index returns everything.
  RankedList search(const Embedding& query, std::size_t k, std::string query_id = "q0") const {
    if (query.dim() != dim_) throw DimensionMismatch(dim_, query.dim());
    if (k < 1) throw ConfigError("search K must be >= 1");
    std::vector<ScoredChunk> all;
    all.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) {
      const float* v = data_.data() + i * dim_;
      double s = 0.0;
      for (std::size_t j = 0; j < dim_; ++j)
        s += static_cast<double>(v[j]) * static_cast<double>(query.values[j]);
      all.push_back({ids_[i], s});
    }
    const std::size_t n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                      ranks_before);
    all.resize(n);
    return {std::move(query_id), std::move(all), ListSource::dense};
  }

  /// BM25 over chunk texts; passages with no query term are excluded.
  RankedList lexical_search(const std::string& query, std::size_t k, const Bm25Params& params,
                            std::string query_id = "q0") const {
    if (k < 1) throw ConfigError("search K must be >= 1");
    const LexicalIndex& lex = lexical();
    std::vector<ScoredChunk> all;
    for (const auto& [d, s] : lex.score(query, params)) all.push_back({ids_[d], s});
    const std::size_t n = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                      ranks_before);
    all.resize(n);
    return {std::move(query_id), std::move(all), ListSource::lexical};
  }

  /// Term statistics, built by seal() (or on first use if unsealed).
  const LexicalIndex& lexical() const {
    if (!lexical_) {
      std::vector<std::string> texts;
      texts.reserve(meta_.size());
      for (const auto& m : meta_) texts.push_back(m.text);
      lexical_ = std::make_shared<const LexicalIndex>(texts);
    }
    return *lexical_;
  }

  /// Call after the last add() and before sharing across threads.
  void seal() { lexical(); }

  void save(const std::string& path) const;
  static VectorIndex load(const std::string& path);

 private:
  std::string provider_id_;
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<float> data_;
  std::vector<ChunkMeta> meta_;
  std::unordered_map<std::string, std::size_t> pos_;
  mutable std::shared_ptr<const LexicalIndex> lexical_;
};

namespace detail {

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void put_string(std::string_view s) {
    if (s.size() > 0xFFFFFFFFu) throw Error("string too long for index record");
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void put_raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  const std::string& bytes() const noexcept { return out_; }

 private:
  std::string out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string data) : data_(std::move(data)) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, data_.data() + off_, sizeof(T));
    off_ += sizeof(T);
    return v;
  }
  std::string get_string(const char* what) {
    const auto n = get<std::uint32_t>(what);
    need(n, what);
    std::string s = data_.substr(off_, n);
    off_ += n;
    return s;
  }
  void get_raw(void* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, data_.data() + off_, n);
    off_ += n;
  }
  std::uint64_t offset() const noexcept { return off_; }
  bool at_end() const noexcept { return off_ == data_.size(); }

 private:
  void need(std::size_t n, const char* what) {
    if (data_.size() - off_ < n)
      throw IndexFormatError(off_, std::string("file truncated while reading ") + what);
  }
  std::string data_;
  std::size_t off_ = 0;
};

}  // namespace detail

inline void VectorIndex::save(const std::string& path) const {
  detail::ByteWriter w;
  w.put_raw(kMagic, 4);
  w.put<std::uint16_t>(kVersion);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(dim_));
  w.put<std::uint64_t>(size());
  w.put_string(provider_id_);
  for (std::size_t i = 0; i < size(); ++i) {
    w.put_string(ids_[i]);
    w.put_raw(data_.data() + i * dim_, dim_ * sizeof(float));
  }
  for (const auto& m : meta_) w.put_string(json(m).dump());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write index '" + path + "'");
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
  if (!out) throw Error("failed writing index '" + path + "'");
}

inline VectorIndex VectorIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index '" + path + "'");
  detail::ByteReader r(std::string(std::istreambuf_iterator<char>(in), {}));
  char magic[4];
  r.get_raw(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw IndexFormatError(0, "bad magic, not an ARXI index file");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kVersion)
    throw IndexFormatError(4, "unsupported index version " + std::to_string(version));
  const auto dim = r.get<std::uint16_t>("dim");
  const auto count = r.get<std::uint64_t>("count");
  VectorIndex idx(r.get_string("provider_id"), dim);
  std::vector<std::string> ids;
  std::vector<std::vector<float>> vecs;
  for (std::uint64_t i = 0; i < count; ++i) {
    ids.push_back(r.get_string("chunk_id"));
    std::vector<float> v(dim);
    r.get_raw(v.data(), dim * sizeof(float), "vector");
    vecs.push_back(std::move(v));
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto at = r.offset();
    const std::string rec = r.get_string("metadata");
    ChunkMeta m;
    try {
      m = json::parse(rec).get<ChunkMeta>();
    } catch (const json::exception& e) {
      throw IndexFormatError(at, std::string("bad metadata record: ") + e.what());
    }
    idx.add(std::move(ids[i]), vecs[i], std::move(m));
  }
  if (!r.at_end()) throw IndexFormatError(r.offset(), "trailing bytes after metadata");
  idx.seal();
  return idx;
}

/// Embeds every chunk (in parallel batches for remote providers) and adds
/// them in corpus order.
inline VectorIndex build_index(const Corpus& corpus, const ProviderConfig& provider) {
  if (corpus.chunks.empty()) throw Error("cannot build an index from an empty corpus");
  provider.validate();
  VectorIndex idx(provider.provider_id(), provider.dim);
  const std::size_t step =
      provider.kind == ProviderKind::remote
          ? provider.batch_size * provider.max_concurrent_requests
          : corpus.chunks.size();
  for (std::size_t begin = 0; begin < corpus.chunks.size(); begin += step) {
    const std::size_t end = std::min(corpus.chunks.size(), begin + step);
    std::vector<std::string> texts;
    for (std::size_t i = begin; i < end; ++i) texts.push_back(corpus.chunks[i].text);
    std::vector<Embedding> vecs;
    try {
      vecs = embed_batch(texts, provider, TextRole::document);
    } catch (const BackendError& e) {
      throw BackendError(e.component(),
                         std::string(e.what()) + " (embedded " + std::to_string(begin) + " of " +
                             std::to_string(corpus.chunks.size()) + " chunks)",
                         e.status(), e.retryable());
    }
    for (std::size_t i = begin; i < end; ++i) {
      const Chunk& c = corpus.chunks[i];
      idx.add(c.chunk_id, vecs[i - begin].values, {c.doc_id, c.title, c.lang, c.text});
    }
  }
  idx.seal();
  return idx;
}

}  // namespace archrag
