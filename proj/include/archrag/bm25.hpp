#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "archrag/text/unicode.hpp"

namespace archrag {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// Term statistics over a fixed, ordered set of passages.
class LexicalIndex {
 public:
  LexicalIndex() = default;

  explicit LexicalIndex(const std::vector<std::string>& passages) {
    doc_len_.reserve(passages.size());
    for (std::size_t d = 0; d < passages.size(); ++d) {
      const auto toks = text::word_tokens(passages[d]);
      doc_len_.push_back(toks.size());
      total_len_ += toks.size();
      std::map<std::string, std::uint32_t> tf;
      for (const auto& t : toks) ++tf[t];
      for (const auto& [term, n] : tf) postings_[term].push_back({d, n});
    }
  }

  std::size_t size() const noexcept { return doc_len_.size(); }
  double avg_len() const noexcept {
    return doc_len_.empty() ? 0.0
                            : static_cast<double>(total_len_) / static_cast<double>(doc_len_.size());
  }
  std::size_t doc_len(std::size_t d) const { return doc_len_.at(d); }
  std::size_t doc_freq(const std::string& term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? 0 : it->second.size();
  }

  /// Non-negative idf: ln(1 + (N - df + 0.5) / (df + 0.5)).
  double idf(const std::string& term) const {
    const double n = static_cast<double>(size());
    const double df = static_cast<double>(doc_freq(term));
    return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
  }

  /// BM25 score of every passage sharing at least one term with the query;
  /// each distinct query term counts once.
  std::vector<std::pair<std::size_t, double>> score(const std::string& query,
                                                    const Bm25Params& p) const {
    auto terms = text::word_tokens(query);
    std::sort(terms.begin(), terms.end());
    terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
    std::unordered_map<std::size_t, double> acc;
    const double avgdl = avg_len();
    for (const auto& t : terms) {
      auto it = postings_.find(t);
      if (it == postings_.end()) continue;
      const double w = idf(t);
      for (const auto& [d, tf] : it->second) {
        const double f = static_cast<double>(tf);
        const double norm = 1.0 - p.b + p.b * static_cast<double>(doc_len_[d]) / avgdl;
        acc[d] += w * f * (p.k1 + 1.0) / (f + p.k1 * norm);
      }
    }
    std::vector<std::pair<std::size_t, double>> out(acc.begin(), acc.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  struct Posting {
    std::size_t doc;
    std::uint32_t tf;
  };
  std::unordered_map<std::string, std::vector<Posting>> postings_;
  std::vector<std::size_t> doc_len_;
  std::size_t total_len_ = 0;
};

}  // namespace archrag
