#pragma once

// Query expansion, per-query dense/lexical retrieval and Reciprocal Rank
// Fusion of the resulting lists.

#include <algorithm>
#include <future>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "archrag/backends.hpp"
#include "archrag/index.hpp"
#include "archrag/prompts.hpp"

namespace archrag {

struct RetrievalConfig {
  std::size_t num_variations = 5;
  int rrf_k = 60;
  std::size_t top_k_per_query = 20;
  std::size_t final_k = 5;
  bool enable_lexical = false;
  Bm25Params bm25;
  std::string expansion_model = "mistralai/Mistral-7B-Instruct-v0.3";
  double expansion_temperature = 0.7;
  int expansion_max_tokens = 256;

  void validate() const {
    if (rrf_k < 1) throw ConfigError("rrf_k must be >= 1");
    if (final_k < 1) throw ConfigError("final_K must be >= 1");
    if (top_k_per_query < 1) throw ConfigError("top_k_per_query must be >= 1");
  }
};

/// The original query plus its reformulations.
struct QuerySet {
  std::string original;
  std::vector<std::string> variations;
  std::string lang;
  /// Set when expansion was requested but produced nothing usable.
  bool degraded = false;
  std::string degradation_reason;

  /// Original first, then the variations in order.
  std::vector<std::string> queries() const {
    std::vector<std::string> q{original};
    q.insert(q.end(), variations.begin(), variations.end());
    return q;
  }
};

/// Key used for deduplication: lowercase, whitespace collapsed.
inline std::string dedupe_key(std::string_view s) {
  const std::string lower = text::to_lower(s);
  std::string out;
  for (auto tok : text::split_whitespace(lower)) {
    if (!out.empty()) out.push_back(' ');
    out.append(tok);
  }
  return out;
}

namespace detail {

// "1." "2)" "-" "*" "•" and similar list prefixes.
inline std::string_view strip_enumeration(std::string_view line) {
  line = text::trim(line);
  for (;;) {
    std::size_t i = 0;
    while (i < line.size() && line[i] >= '0' && line[i] <= '9') ++i;
    if (i > 0 && i < line.size() && (line[i] == '.' || line[i] == ')')) {
      line = text::trim(line.substr(i + 1));
      continue;
    }
    if (!line.empty() && (line[0] == '-' || line[0] == '*')) {
      line = text::trim(line.substr(1));
      continue;
    }
    if (line.starts_with("•")) {
      line = text::trim(line.substr(3));
      continue;
    }
    break;
  }
  if (line.size() >= 2 && line.front() == '"' && line.back() == '"')
    line = text::trim(line.substr(1, line.size() - 2));
  return line;
}

}  // namespace detail

/// Parses one-per-line reformulations, dropping enumeration markers, echoes of
/// the output header, duplicates and copies of the original.
inline std::vector<std::string> parse_variations(std::string_view response,
                                                 std::string_view original, std::size_t limit) {
  std::vector<std::string> out;
  std::set<std::string> seen{dedupe_key(original)};
  std::size_t pos = 0;
  while (pos <= response.size() && out.size() < limit) {
    auto nl = response.find('\n', pos);
    if (nl == std::string_view::npos) nl = response.size();
    const auto line = detail::strip_enumeration(response.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) continue;
    const std::string key = dedupe_key(line);
    if (key == "reformulations:" || key.empty()) continue;
    if (!seen.insert(key).second) continue;
    out.emplace_back(line);
  }
  return out;
}

/// Asks the LLM for reformulations of q. Never fails on backend trouble:
/// an unusable response (after one retry) or a transport failure yields an
/// empty, degraded QuerySet.
inline QuerySet expand_query(const std::string& q, const RetrievalConfig& cfg,
                             const LlmBackend* llm, std::string lang = {},
                             std::string_view tmpl = prompts::kQueryVariation) {
  if (text::trim(q).empty()) throw Error("expand_query: empty query");
  QuerySet qs{q, {}, std::move(lang), false, {}};
  if (cfg.num_variations == 0) return qs;
  if (!llm) throw ConfigError("query expansion needs an LLM backend (set LLM_API_BASE)");

  const ChatRequest req{cfg.expansion_model,
                        prompts::render(tmpl, {{"num_variations", std::to_string(cfg.num_variations)},
                                               {"original_query", q}}),
                        cfg.expansion_temperature, cfg.expansion_max_tokens};
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      qs.variations = parse_variations(llm->complete(req), q, cfg.num_variations);
    } catch (const BackendError& e) {
      qs.degraded = true;
      qs.degradation_reason = e.what();
      return qs;
    }
    if (!qs.variations.empty()) return qs;
  }
  qs.degraded = true;
  qs.degradation_reason = "no usable reformulations in LLM response";
  return qs;
}

struct Contribution {
  std::string query_id;
  std::size_t rank = 0;

  bool operator==(const Contribution&) const = default;
};

struct FusedItem {
  std::string chunk_id;
  double score = 0.0;
  std::vector<Contribution> contributing;

  bool operator==(const FusedItem&) const = default;
};

struct FusedResult {
  std::vector<FusedItem> items;

  bool empty() const noexcept { return items.empty(); }
  bool operator==(const FusedResult&) const = default;
};

/// Reciprocal Rank Fusion with 1-based ranks: score(d) = sum 1/(k + rank).
/// Absent documents contribute nothing. Each document's terms are summed in
/// ascending-rank order so scores do not depend on the order of `lists`.
inline FusedResult rrf_fuse(const std::vector<RankedList>& lists, int k) {
  if (k < 1) throw ConfigError("rrf k must be >= 1");
  std::map<std::string, std::vector<Contribution>> contrib;
  for (const auto& list : lists) {
    std::set<std::string_view> in_list;
    for (std::size_t pos = 0; pos < list.items.size(); ++pos) {
      const auto& id = list.items[pos].chunk_id;
      if (!in_list.insert(id).second) continue;
      contrib[id].push_back({list.query_id, pos + 1});
    }
  }
  FusedResult out;
  out.items.reserve(contrib.size());
  for (auto& [id, cs] : contrib) {
    std::vector<std::size_t> ranks;
    for (const auto& c : cs) ranks.push_back(c.rank);
    std::sort(ranks.begin(), ranks.end());
    double score = 0.0;
    for (auto r : ranks) score += 1.0 / (static_cast<double>(k) + static_cast<double>(r));
    out.items.push_back({id, score, std::move(cs)});
  }
  std::stable_sort(out.items.begin(), out.items.end(), [](const FusedItem& a, const FusedItem& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.chunk_id < b.chunk_id;
  });
  return out;
}

/// Runs dense (and optionally lexical) search for every query in Q. List
/// ids are "q<i>:dense" / "q<i>:lexical", q0 being the original query.
inline std::vector<RankedList> gather_lists(const VectorIndex& index, const QuerySet& qs,
                                            const RetrievalConfig& cfg,
                                            const ProviderConfig& provider) {
  cfg.validate();
  if (index.provider_id() != provider.provider_id())
    throw ConfigError("index was built with provider '" + index.provider_id() +
                      "' but queries use '" + provider.provider_id() + "'");
  const auto queries = qs.queries();
  const auto vecs = embed_batch(queries, provider, TextRole::query);
  std::vector<std::future<std::vector<RankedList>>> jobs;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      const std::string qid = "q" + std::to_string(i);
      std::vector<RankedList> out{index.search(vecs[i], cfg.top_k_per_query, qid + ":dense")};
      if (cfg.enable_lexical)
        out.push_back(
            index.lexical_search(queries[i], cfg.top_k_per_query, cfg.bm25, qid + ":lexical"));
      return out;
    }));
  }
  std::vector<RankedList> lists;
  for (auto& j : jobs) {
    auto part = j.get();
    std::move(part.begin(), part.end(), std::back_inserter(lists));
  }
  return lists;
}

/// Fuses all per-query lists and keeps the top final_k.
inline FusedResult retrieve_hybrid(const VectorIndex& index, const QuerySet& qs,
                                   const RetrievalConfig& cfg, const ProviderConfig& provider) {
  FusedResult fused = rrf_fuse(gather_lists(index, qs, cfg, provider), cfg.rrf_k);
  if (fused.items.size() > cfg.final_k) fused.items.resize(cfg.final_k);
  return fused;
}

}  // namespace archrag
