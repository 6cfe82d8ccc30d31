#pragma once

// TREC qrels / run files and the benchmark query JSONL.

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "archrag/eval/metrics.hpp"

namespace archrag::eval {

/// "query_id 0 chunk_id relevance". Zero-relevance lines register the query
/// with no relevant chunk.
inline Qrels parse_qrels(std::istream& in) {
  Qrels q;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    std::string qid, iter, doc, extra;
    int rel = -1;
    if (!(ls >> qid >> iter >> doc >> rel) || (ls >> extra))
      throw ParseError(line_no, "expected 'query_id 0 chunk_id relevance'");
    if (rel != 0 && rel != 1) throw ParseError(line_no, "relevance must be 0 or 1");
    auto& set = q[qid];
    if (rel == 1) set.insert(doc);
  }
  return q;
}

inline Qrels read_qrels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open qrels file '" + path + "'");
  return parse_qrels(in);
}

inline void write_qrels(const Qrels& qrels, std::ostream& out) {
  for (const auto& [qid, rel] : qrels)
    for (const auto& d : rel) out << qid << " 0 " << d << " 1\n";
}

/// "query_id Q0 chunk_id rank score tag", ranks 1-based.
inline void write_run(const RunResult& run, const std::string& tag, std::ostream& out) {
  for (const auto& [qid, items] : run)
    for (std::size_t i = 0; i < items.size(); ++i)
      out << qid << " Q0 " << items[i].chunk_id << ' ' << (i + 1) << ' '
          << std::setprecision(17) << items[i].score << ' ' << tag << '\n';
}

inline RunResult parse_run(std::istream& in) {
  struct Row {
    std::size_t rank;
    ScoredChunk item;
  };
  std::map<std::string, std::vector<Row>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    std::istringstream ls(line);
    std::string qid, q0, doc, tag;
    std::size_t rank = 0;
    double score = 0.0;
    if (!(ls >> qid >> q0 >> doc >> rank >> score >> tag))
      throw ParseError(line_no, "expected 'query_id Q0 chunk_id rank score tag'");
    rows[qid].push_back({rank, {doc, score}});
  }
  RunResult run;
  for (auto& [qid, r] : rows) {
    std::stable_sort(r.begin(), r.end(), [](const Row& a, const Row& b) { return a.rank < b.rank; });
    auto& items = run[qid];
    for (auto& row : r) items.push_back(std::move(row.item));
  }
  return run;
}

inline RunResult read_run(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open run file '" + path + "'");
  return parse_run(in);
}

enum class QueryCategory { fact, entity, interpretive, absurd };

inline const char* to_string(QueryCategory c) {
  switch (c) {
    case QueryCategory::fact: return "fact";
    case QueryCategory::entity: return "entity";
    case QueryCategory::interpretive: return "interpretive";
    case QueryCategory::absurd: return "absurd";
  }
  return "fact";
}

inline QueryCategory parse_category(const std::string& s) {
  if (s == "fact") return QueryCategory::fact;
  if (s == "entity") return QueryCategory::entity;
  if (s == "interpretive") return QueryCategory::interpretive;
  if (s == "absurd") return QueryCategory::absurd;
  throw Error("unknown query category '" + s + "'");
}

struct BenchmarkQuery {
  std::string query_id;
  std::string text;
  std::string lang;
  QueryCategory category = QueryCategory::fact;
};

inline std::vector<BenchmarkQuery> read_queries(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open query file '" + path + "'");
  std::vector<BenchmarkQuery> out;
  std::set<std::string> ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      BenchmarkQuery q{j.at("query_id").get<std::string>(), j.at("text").get<std::string>(),
                       j.value("lang", std::string{}),
                       parse_category(j.value("category", std::string("fact")))};
      if (q.query_id.empty()) throw ParseError(line_no, "empty query_id");
      if (!ids.insert(q.query_id).second) throw DuplicateIdError(q.query_id);
      out.push_back(std::move(q));
    } catch (const json::exception& e) {
      throw ParseError(line_no, std::string("bad query record: ") + e.what());
    } catch (const ParseError&) {
      throw;
    } catch (const DuplicateIdError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(line_no, e.what());
    }
  }
  return out;
}

}  // namespace archrag::eval
