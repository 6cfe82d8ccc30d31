#pragma once

// Evidence structuring, the grounded QA prompt, and abstention handling.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "archrag/backends.hpp"
#include "archrag/index.hpp"
#include "archrag/prompts.hpp"
#include "archrag/retrieval.hpp"

namespace archrag {

inline constexpr std::string_view kGroupSeparator = "\n\n---\n\n";

struct Passage {
  std::string chunk_id;
  std::string text;
  std::size_t fused_rank = 0;  // 1-based
  double fused_score = 0.0;

  bool operator==(const Passage&) const = default;
};

struct EvidenceGroup {
  std::string doc_id;
  std::string title;
  std::vector<Passage> passages;

  bool operator==(const EvidenceGroup&) const = default;
};

struct EvidenceContext {
  std::vector<EvidenceGroup> groups;
  std::string rendered;

  std::vector<std::string> chunk_ids() const {
    std::vector<std::string> ids;
    for (const auto& g : groups)
      for (const auto& p : g.passages) ids.push_back(p.chunk_id);
    return ids;
  }
};

inline std::string render_group(const EvidenceGroup& g) {
  std::string s = "[Article: " + g.title + " | Document: " + g.doc_id + "]";
  for (std::size_t i = 0; i < g.passages.size(); ++i) {
    s += i == 0 ? "\n" : "\n\n";
    s += g.passages[i].text;
  }
  return s;
}

/// Groups fused chunks by source document. Groups are ordered by their best
/// fused rank, passages within a group by fused rank.
inline EvidenceContext structure_context(const FusedResult& fused, const VectorIndex& index) {
  EvidenceContext ctx;
  std::map<std::string, std::size_t> group_of;
  for (std::size_t r = 0; r < fused.items.size(); ++r) {
    const auto& item = fused.items[r];
    const ChunkMeta& m = index.meta(item.chunk_id);
    auto [it, inserted] = group_of.emplace(m.doc_id, ctx.groups.size());
    if (inserted) ctx.groups.push_back({m.doc_id, m.title, {}});
    ctx.groups[it->second].passages.push_back({item.chunk_id, m.text, r + 1, item.score});
  }
  for (std::size_t g = 0; g < ctx.groups.size(); ++g) {
    if (g > 0) ctx.rendered += kGroupSeparator;
    ctx.rendered += render_group(ctx.groups[g]);
  }
  return ctx;
}

inline std::string build_answer_prompt(const EvidenceContext& ctx, const std::string& query,
                                       std::string_view tmpl = prompts::kAnswerQa) {
  if (text::trim(query).empty()) throw Error("build_answer_prompt: empty query");
  return prompts::render(tmpl, {{"context_text", ctx.rendered}, {"query", query}});
}

struct GenerationConfig {
  std::string model_name = "mistralai/Mistral-7B-Instruct-v0.3";
  double temperature = 0.3;
  int max_output_tokens = 512;
  std::map<std::string, std::vector<std::string>> abstention_phrases{
      {"en", {std::string(prompts::kAbstentionEn)}},
      {"fr",
       {"Je ne peux pas répondre à cette question sur la seule base des informations fournies"}},
  };
  /// Report-only faithfulness gate.
  std::optional<double> faithfulness_threshold;

  void validate() const {
    if (temperature < 0) throw ConfigError("temperature must be >= 0");
    if (faithfulness_threshold && (*faithfulness_threshold < 0 || *faithfulness_threshold > 1))
      throw ConfigError("faithfulness threshold must lie in [0, 1]");
  }

  std::string abstention_text(const std::string& lang) const {
    auto it = abstention_phrases.find(lang);
    if (it != abstention_phrases.end() && !it->second.empty()) return it->second.front();
    return std::string(prompts::kAbstentionEn);
  }
};

struct Answer {
  std::string text;
  bool abstained = false;
  /// The model returned nothing; treated as an abstention.
  bool empty_completion = false;
  std::vector<std::string> citations;
  std::string query;
  std::string lang;
  std::string model;
  double temperature = 0.0;

  bool operator==(const Answer&) const = default;
};

/// Lowercase, punctuation to spaces, whitespace collapsed.
inline std::string normalize_for_match(std::string_view s) {
  const std::string lower = text::to_lower(s);
  std::string out;
  bool pending_space = false;
  text::for_each_code_point(lower, [&](char32_t c, std::size_t off, std::size_t n) {
    if (text::is_space(c) || text::is_punct(c)) {
      pending_space = !out.empty();
      return;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.append(lower, off, n);
  });
  return out;
}

inline bool detect_abstention(std::string_view answer, const std::string& lang,
                              const GenerationConfig& cfg) {
  const std::string norm = normalize_for_match(answer);
  auto matches = [&](const std::vector<std::string>& phrases) {
    for (const auto& p : phrases) {
      const std::string np = normalize_for_match(p);
      if (!np.empty() && norm.find(np) != std::string::npos) return true;
    }
    return false;
  };
  if (auto it = cfg.abstention_phrases.find(lang); it != cfg.abstention_phrases.end() &&
                                                   matches(it->second))
    return true;
  if (auto it = cfg.abstention_phrases.find("en"); it != cfg.abstention_phrases.end())
    return matches(it->second);
  return false;
}

/// One completion at cfg.temperature. Backend failures propagate; an empty
/// completion becomes an abstention flagged `empty_completion`.
inline Answer generate_answer(const std::string& prompt, const GenerationConfig& cfg,
                              const LlmBackend& llm, std::vector<std::string> citations,
                              std::string query, std::string lang) {
  cfg.validate();
  Answer a;
  a.citations = std::move(citations);
  a.query = std::move(query);
  a.lang = std::move(lang);
  a.model = cfg.model_name;
  a.temperature = cfg.temperature;
  a.text = std::string(text::trim(
      llm.complete({cfg.model_name, prompt, cfg.temperature, cfg.max_output_tokens})));
  if (a.text.empty()) {
    a.empty_completion = true;
    a.abstained = true;
    a.text = cfg.abstention_text(a.lang);
    return a;
  }
  a.abstained = detect_abstention(a.text, a.lang, cfg);
  return a;
}

}  // namespace archrag
