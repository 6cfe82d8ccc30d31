#pragma once

// Set-based retrieval metrics and entity coherence.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "archrag/corpus.hpp"
#include "archrag/index.hpp"

namespace archrag::eval {

/// query_id -> relevant chunk_ids (binary relevance).
using Qrels = std::map<std::string, std::set<std::string>>;
/// query_id -> ranked (chunk_id, score) list.
using RunResult = std::map<std::string, std::vector<ScoredChunk>>;

/// Queries skipped because their relevant set is empty.
struct MetricWarnings {
  std::vector<std::string> skipped_queries;
};

namespace detail {

inline std::size_t hits_in_top(const std::vector<ScoredChunk>& ranked,
                                const std::set<std::string>& relevant, std::size_t k) {
  std::size_t hits = 0;
  std::set<std::string_view> counted;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i)
    if (relevant.contains(ranked[i].chunk_id) && counted.insert(ranked[i].chunk_id).second) ++hits;
  return hits;
}

template <typename PerQuery>
double mean_over_queries(const RunResult& run, const Qrels& qrels, PerQuery per_query,
                         MetricWarnings* warnings) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& [qid, ranked] : run) {
    auto it = qrels.find(qid);
    if (it == qrels.end()) throw Error("query '" + qid + "' has no relevance judgments");
    if (it->second.empty()) {
      if (warnings) warnings->skipped_queries.push_back(qid);
      continue;
    }
    sum += per_query(ranked, it->second);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace detail

/// Mean over queries of |relevant ∩ top-K| / |relevant|.
inline double recall_at_k(const RunResult& run, const Qrels& qrels, std::size_t k,
                          MetricWarnings* warnings = nullptr) {
  if (k < 1) throw ConfigError("K must be >= 1");
  return detail::mean_over_queries(
      run, qrels,
      [k](const auto& ranked, const auto& rel) {
        return static_cast<double>(detail::hits_in_top(ranked, rel, k)) /
               static_cast<double>(rel.size());
      },
      warnings);
}

/// Mean over queries of |relevant ∩ top-5| / 5; the denominator stays 5 for
/// short lists.
inline double top5_rate(const RunResult& run, const Qrels& qrels,
                        MetricWarnings* warnings = nullptr) {
  return detail::mean_over_queries(
      run, qrels,
      [](const auto& ranked, const auto& rel) {
        return static_cast<double>(detail::hits_in_top(ranked, rel, 5)) / 5.0;
      },
      warnings);
}

/// Score gap between the first and second items.
inline double confidence_drop(const RankedList& list) {
  if (list.items.size() < 2)
    throw UndefinedMetric("confidence drop needs at least two ranked items");
  return list.items[0].score - list.items[1].score;
}

/// Mean confidence drop over lists with at least two items.
inline double mean_confidence_drop(const std::vector<RankedList>& lists) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& l : lists) {
    if (l.items.size() < 2) continue;
    sum += confidence_drop(l);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

inline const std::set<std::string>& standard_entity_labels() {
  static const std::set<std::string> labels{"PER", "ORG", "LOC", "MISC"};
  return labels;
}

/// Lowercase function words that cannot open a well-formed entity.
inline const std::set<std::string>& function_words() {
  static const std::set<std::string> words{
      // en
      "a", "an", "the", "of", "in", "on", "at", "to", "for", "from", "by", "with", "and", "or",
      "but", "as", "into", "about", "according", "this", "that", "these", "those", "his", "her",
      "its", "their", "is", "was", "were",
      // fr
      "le", "la", "les", "l", "un", "une", "des", "du", "de", "d", "à", "au", "aux", "en", "et",
      "ou", "mais", "pour", "par", "avec", "sans", "sur", "sous", "dans", "selon", "ce", "cette",
      "ces", "son", "sa", "ses", "leur", "leurs", "qui", "que", "est"};
  return words;
}

/// Coherent iff: no "##" continuation marker, no leading/trailing punctuation
/// or whitespace, a standard label, and no leading lowercase function word.
inline bool is_coherent_entity(const std::string& surface, const std::string& label) {
  if (surface.empty()) return false;
  if (surface.find("##") != std::string::npos) return false;
  if (!standard_entity_labels().contains(label)) return false;
  char32_t first = 0, last = 0;
  bool seen = false;
  text::for_each_code_point(surface, [&](char32_t c, std::size_t, std::size_t) {
    if (!seen) first = c;
    seen = true;
    last = c;
  });
  for (char32_t c : {first, last})
    if (text::is_space(c) || text::is_punct(c)) return false;
  // First word, cut at whitespace or an apostrophe ("l'Europe" -> "l").
  std::string head;
  text::for_each_code_point(surface, [&, done = false](char32_t c, std::size_t off,
                                                        std::size_t n) mutable {
    if (done) return;
    if (text::is_space(c) || c == U'\'' || c == U'’') {
      done = true;
      return;
    }
    head.append(surface, off, n);
  });
  if (head == text::to_lower(head) && function_words().contains(head)) return false;
  return true;
}

/// Share of coherent entities across all sets.
inline double syntactic_relevance(const std::vector<std::vector<Entity>>& entity_sets) {
  std::size_t total = 0, coherent = 0;
  for (const auto& set : entity_sets)
    for (const auto& e : set) {
      ++total;
      if (is_coherent_entity(e.surface, e.label)) ++coherent;
    }
  if (total == 0) throw UndefinedMetric("syntactic relevance of zero entities is undefined");
  return static_cast<double>(coherent) / static_cast<double>(total);
}

}  // namespace archrag::eval
