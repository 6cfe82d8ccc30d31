#pragma once

// Query-time pipeline: expand, search, fuse, structure, generate.

#include <chrono>
#include <memory>
#include <string>

#include "archrag/app/config.hpp"
#include "archrag/generation.hpp"

namespace archrag::app {

struct AskTimings {
  double expand_s = 0.0;
  double search_s = 0.0;
  double fuse_s = 0.0;
  double generate_s = 0.0;

  bool operator==(const AskTimings&) const = default;
};

struct SearchResult {
  QuerySet queries;
  FusedResult fused;
  AskTimings timings;
};

struct AskResponse {
  Answer answer;
  std::vector<EvidenceGroup> evidence;
  std::vector<std::string> variations;
  bool expansion_degraded = false;
  AskTimings timings;

  bool operator==(const AskResponse&) const = default;
};

inline void to_json(json& j, const AskTimings& t) {
  j = {{"expand_s", t.expand_s}, {"search_s", t.search_s}, {"fuse_s", t.fuse_s},
       {"generate_s", t.generate_s}};
}
inline void from_json(const json& j, AskTimings& t) {
  j.at("expand_s").get_to(t.expand_s);
  j.at("search_s").get_to(t.search_s);
  j.at("fuse_s").get_to(t.fuse_s);
  j.at("generate_s").get_to(t.generate_s);
}

}  // namespace archrag::app

namespace archrag {

inline void to_json(json& j, const Answer& a) {
  j = {{"text", a.text},   {"abstained", a.abstained}, {"empty_completion", a.empty_completion},
       {"citations", a.citations}, {"query", a.query}, {"lang", a.lang},
       {"model", a.model}, {"temperature", a.temperature}};
}
inline void from_json(const json& j, Answer& a) {
  j.at("text").get_to(a.text);
  j.at("abstained").get_to(a.abstained);
  j.at("empty_completion").get_to(a.empty_completion);
  j.at("citations").get_to(a.citations);
  j.at("query").get_to(a.query);
  j.at("lang").get_to(a.lang);
  j.at("model").get_to(a.model);
  j.at("temperature").get_to(a.temperature);
}
inline void to_json(json& j, const Passage& p) {
  j = {{"chunk_id", p.chunk_id}, {"text", p.text}, {"fused_rank", p.fused_rank},
       {"fused_score", p.fused_score}};
}
inline void from_json(const json& j, Passage& p) {
  j.at("chunk_id").get_to(p.chunk_id);
  j.at("text").get_to(p.text);
  j.at("fused_rank").get_to(p.fused_rank);
  j.at("fused_score").get_to(p.fused_score);
}
inline void to_json(json& j, const EvidenceGroup& g) {
  j = {{"doc_id", g.doc_id}, {"title", g.title}, {"passages", g.passages},
       {"rendered", render_group(g)}};
}
inline void from_json(const json& j, EvidenceGroup& g) {
  j.at("doc_id").get_to(g.doc_id);
  j.at("title").get_to(g.title);
  j.at("passages").get_to(g.passages);
}

}  // namespace archrag

namespace archrag::app {

inline void to_json(json& j, const AskResponse& r) {
  j = {{"answer", r.answer},
       {"evidence", r.evidence},
       {"variations", r.variations},
       {"expansion_degraded", r.expansion_degraded},
       {"timings", r.timings}};
}
inline void from_json(const json& j, AskResponse& r) {
  j.at("answer").get_to(r.answer);
  j.at("evidence").get_to(r.evidence);
  j.at("variations").get_to(r.variations);
  j.at("expansion_degraded").get_to(r.expansion_degraded);
  j.at("timings").get_to(r.timings);
}

/// "fr" when French function words outnumber English ones, else "en".
inline std::string guess_lang(std::string_view s) {
  static const std::set<std::string> fr{"le", "la", "les", "des", "du", "de", "est", "et", "qui",
                                        "que", "quelles", "quels", "quel", "quelle", "une", "un",
                                        "en", "ont", "été", "comment", "pourquoi", "où", "dans"};
  static const std::set<std::string> en{"the", "of", "and", "is", "was", "were", "what", "who",
                                        "how", "why", "where", "when", "in", "did", "a", "an"};
  int f = 0, e = 0;
  for (const auto& w : text::word_tokens(s)) {
    f += fr.contains(w);
    e += en.contains(w);
  }
  return f > e ? "fr" : "en";
}

/// Everything a query needs, shared read-only between requests.
class Engine {
 public:
  Engine(AppConfig cfg, std::shared_ptr<const VectorIndex> index,
         std::shared_ptr<const LlmBackend> llm)
      : cfg_(std::move(cfg)), index_(std::move(index)), llm_(std::move(llm)),
        templates_(cfg_.templates()) {
    if (!index_) throw ConfigError("engine needs an index");
  }

  const AppConfig& config() const noexcept { return cfg_; }
  const VectorIndex& index() const noexcept { return *index_; }
  const LlmBackend* llm() const noexcept { return llm_.get(); }
  const prompts::TemplateSet& templates() const noexcept { return templates_; }

  SearchResult search(const std::string& query, const RetrievalConfig& rc,
                      const std::string& lang = {}) const {
    using Clock = std::chrono::steady_clock;
    auto secs = [](Clock::time_point t0) {
      return std::chrono::duration<double>(Clock::now() - t0).count();
    };
    SearchResult r;
    auto t0 = Clock::now();
    r.queries = expand_query(query, rc, llm_.get(), lang.empty() ? guess_lang(query) : lang,
                             templates_.query_variation);
    r.timings.expand_s = secs(t0);
    t0 = Clock::now();
    const auto lists = gather_lists(*index_, r.queries, rc, cfg_.embedding);
    r.timings.search_s = secs(t0);
    t0 = Clock::now();
    r.fused = rrf_fuse(lists, rc.rrf_k);
    if (r.fused.items.size() > rc.final_k) r.fused.items.resize(rc.final_k);
    r.timings.fuse_s = secs(t0);
    return r;
  }

  SearchResult search(const std::string& query) const { return search(query, cfg_.retrieval); }

  /// Full pipeline. Needs an LLM for generation even when expansion is off.
  AskResponse ask(const std::string& question, const std::string& lang = {}) const {
    if (!llm_) throw ConfigError("answering needs an LLM backend (set LLM_API_BASE)");
    const std::string l = lang.empty() ? guess_lang(question) : lang;
    SearchResult s = search(question, cfg_.retrieval, l);
    AskResponse r;
    r.timings = s.timings;
    r.variations = s.queries.variations;
    r.expansion_degraded = s.queries.degraded;
    const EvidenceContext ctx = structure_context(s.fused, *index_);
    const auto t0 = std::chrono::steady_clock::now();
    r.answer = generate_answer(build_answer_prompt(ctx, question, templates_.answer),
                               cfg_.generation, *llm_, ctx.chunk_ids(), question, l);
    r.timings.generate_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.evidence = ctx.groups;
    return r;
  }

  /// The context an answer was generated from, rebuilt from a response.
  static EvidenceContext context_of(const AskResponse& r) {
    EvidenceContext ctx;
    ctx.groups = r.evidence;
    for (std::size_t g = 0; g < ctx.groups.size(); ++g) {
      if (g > 0) ctx.rendered += kGroupSeparator;
      ctx.rendered += render_group(ctx.groups[g]);
    }
    return ctx;
  }

 private:
  AppConfig cfg_;
  std::shared_ptr<const VectorIndex> index_;
  std::shared_ptr<const LlmBackend> llm_;
  prompts::TemplateSet templates_;
};

}  // namespace archrag::app
