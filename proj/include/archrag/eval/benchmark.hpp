#pragma once

// Dense vs fused retrieval benchmark, QA scoring rows, and the evaluation
// report with its JSON / table / CSV renderings.

#include <chrono>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "archrag/eval/clustering.hpp"
#include "archrag/eval/ragas.hpp"
#include "archrag/eval/trec.hpp"
#include "archrag/retrieval.hpp"

namespace archrag::eval {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct RetrievalColumns {
  std::map<std::string, double> recall;  // "1", "5", ...
  double top5_rate = 0.0;
  double mean_confidence_drop = 0.0;

  bool operator==(const RetrievalColumns&) const = default;
};

struct PhaseTimings {
  double expand_s = 0.0;
  double search_s = 0.0;  // embedding + per-list search
  double fuse_s = 0.0;
  double total_s = 0.0;

  bool operator==(const PhaseTimings&) const = default;
};

struct QueryRow {
  std::string query_id;
  /// 1-based rank of the first relevant chunk, 0 when absent.
  std::size_t dense_first_relevant = 0;
  std::size_t fused_first_relevant = 0;
  std::size_t variations = 0;
  bool degraded = false;
  std::string error;

  bool operator==(const QueryRow&) const = default;
};

struct RetrievalReport {
  std::string label;
  std::size_t dim = 0;
  int rrf_k = 60;
  std::size_t num_variations = 0;
  RetrievalColumns dense;
  RetrievalColumns fused;
  PhaseTimings timings;
  std::vector<QueryRow> per_query;
  std::vector<std::string> failed_queries;
  std::vector<std::string> skipped_queries;

  bool operator==(const RetrievalReport&) const = default;
};

struct LatentReport {
  std::size_t n = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  double silhouette = 0.0;
  double davies_bouldin = 0.0;
  double calinski_harabasz = 0.0;

  bool operator==(const LatentReport&) const = default;
};

struct QaRow {
  std::string query_id;
  std::string category;
  std::string question;
  std::string answer;
  bool abstained = false;
  /// nullopt marks a metric that could not be computed.
  std::optional<double> faithfulness;
  std::optional<double> answer_relevancy;
  std::string note;

  bool operator==(const QaRow&) const = default;
};

struct NerReport {
  double syntactic_relevance = 0.0;
  double entities_per_text = 0.0;
  double seconds = 0.0;

  bool operator==(const NerReport&) const = default;
};

struct EvalReport {
  std::optional<RetrievalReport> retrieval;
  std::optional<LatentReport> latent;
  std::vector<QaRow> qa;
  std::optional<NerReport> ner;

  bool operator==(const EvalReport&) const = default;
};

// ---- JSON ----

template <typename T>
void opt_to_json(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}
template <typename T>
void opt_from_json(const json& j, const char* key, std::optional<T>& v) {
  if (!j.contains(key) || j.at(key).is_null()) v.reset();
  else v = j.at(key).get<T>();
}

inline void to_json(json& j, const RetrievalColumns& c) {
  j = {{"recall_at_k", c.recall}, {"top5_rate", c.top5_rate},
       {"mean_confidence_drop", c.mean_confidence_drop}};
}
inline void from_json(const json& j, RetrievalColumns& c) {
  j.at("recall_at_k").get_to(c.recall);
  j.at("top5_rate").get_to(c.top5_rate);
  j.at("mean_confidence_drop").get_to(c.mean_confidence_drop);
}
inline void to_json(json& j, const PhaseTimings& t) {
  j = {{"expand_s", t.expand_s}, {"search_s", t.search_s}, {"fuse_s", t.fuse_s},
       {"total_s", t.total_s}};
}
inline void from_json(const json& j, PhaseTimings& t) {
  j.at("expand_s").get_to(t.expand_s);
  j.at("search_s").get_to(t.search_s);
  j.at("fuse_s").get_to(t.fuse_s);
  j.at("total_s").get_to(t.total_s);
}
inline void to_json(json& j, const QueryRow& r) {
  j = {{"query_id", r.query_id}, {"dense_first_relevant", r.dense_first_relevant},
       {"fused_first_relevant", r.fused_first_relevant}, {"variations", r.variations},
       {"degraded", r.degraded}, {"error", r.error}};
}
inline void from_json(const json& j, QueryRow& r) {
  j.at("query_id").get_to(r.query_id);
  j.at("dense_first_relevant").get_to(r.dense_first_relevant);
  j.at("fused_first_relevant").get_to(r.fused_first_relevant);
  j.at("variations").get_to(r.variations);
  j.at("degraded").get_to(r.degraded);
  j.at("error").get_to(r.error);
}
inline void to_json(json& j, const RetrievalReport& r) {
  j = {{"label", r.label},       {"dim", r.dim},
       {"rrf_k", r.rrf_k},       {"num_variations", r.num_variations},
       {"dense", r.dense},       {"fused", r.fused},
       {"timings", r.timings},   {"per_query", r.per_query},
       {"failed_queries", r.failed_queries}, {"skipped_queries", r.skipped_queries}};
}
inline void from_json(const json& j, RetrievalReport& r) {
  j.at("label").get_to(r.label);
  j.at("dim").get_to(r.dim);
  j.at("rrf_k").get_to(r.rrf_k);
  j.at("num_variations").get_to(r.num_variations);
  j.at("dense").get_to(r.dense);
  j.at("fused").get_to(r.fused);
  j.at("timings").get_to(r.timings);
  j.at("per_query").get_to(r.per_query);
  j.at("failed_queries").get_to(r.failed_queries);
  j.at("skipped_queries").get_to(r.skipped_queries);
}
inline void to_json(json& j, const LatentReport& l) {
  j = {{"n", l.n}, {"k", l.k}, {"seed", l.seed}, {"silhouette", l.silhouette},
       {"davies_bouldin", l.davies_bouldin}, {"calinski_harabasz", l.calinski_harabasz}};
}
inline void from_json(const json& j, LatentReport& l) {
  j.at("n").get_to(l.n);
  j.at("k").get_to(l.k);
  j.at("seed").get_to(l.seed);
  j.at("silhouette").get_to(l.silhouette);
  j.at("davies_bouldin").get_to(l.davies_bouldin);
  j.at("calinski_harabasz").get_to(l.calinski_harabasz);
}
inline void to_json(json& j, const QaRow& r) {
  j = {{"query_id", r.query_id}, {"category", r.category}, {"question", r.question},
       {"answer", r.answer},     {"abstained", r.abstained}, {"note", r.note}};
  opt_to_json(j, "faithfulness", r.faithfulness);
  opt_to_json(j, "answer_relevancy", r.answer_relevancy);
}
inline void from_json(const json& j, QaRow& r) {
  j.at("query_id").get_to(r.query_id);
  j.at("category").get_to(r.category);
  j.at("question").get_to(r.question);
  j.at("answer").get_to(r.answer);
  j.at("abstained").get_to(r.abstained);
  j.at("note").get_to(r.note);
  opt_from_json(j, "faithfulness", r.faithfulness);
  opt_from_json(j, "answer_relevancy", r.answer_relevancy);
}
inline void to_json(json& j, const NerReport& n) {
  j = {{"syntactic_relevance", n.syntactic_relevance},
       {"entities_per_text", n.entities_per_text},
       {"seconds", n.seconds}};
}
inline void from_json(const json& j, NerReport& n) {
  j.at("syntactic_relevance").get_to(n.syntactic_relevance);
  j.at("entities_per_text").get_to(n.entities_per_text);
  j.at("seconds").get_to(n.seconds);
}
inline void to_json(json& j, const EvalReport& r) {
  j = json::object();
  opt_to_json(j, "retrieval", r.retrieval);
  opt_to_json(j, "latent", r.latent);
  j["qa"] = r.qa;
  opt_to_json(j, "ner", r.ner);
}
inline void from_json(const json& j, EvalReport& r) {
  opt_from_json(j, "retrieval", r.retrieval);
  opt_from_json(j, "latent", r.latent);
  j.at("qa").get_to(r.qa);
  opt_from_json(j, "ner", r.ner);
}

// ---- invariants ----

/// Human-readable violations of the report's range invariants; empty when
/// the report is well-formed.
inline std::vector<std::string> range_violations(const EvalReport& r) {
  std::vector<std::string> bad;
  auto rate = [&](const std::string& what, double v) {
    if (!(v >= 0.0 && v <= 1.0)) bad.push_back(what + " = " + std::to_string(v) + " not in [0,1]");
  };
  if (r.retrieval) {
    for (const auto* col : {&r.retrieval->dense, &r.retrieval->fused}) {
      const std::string side = col == &r.retrieval->dense ? "dense" : "fused";
      for (const auto& [k, v] : col->recall) rate(side + " recall@" + k, v);
      rate(side + " top5_rate", col->top5_rate);
      if (col->mean_confidence_drop < 0)
        bad.push_back(side + " mean_confidence_drop is negative");
    }
    const auto& t = r.retrieval->timings;
    if (t.expand_s < 0 || t.search_s < 0 || t.fuse_s < 0 || t.total_s < 0)
      bad.push_back("negative timing");
  }
  if (r.latent) {
    if (!(r.latent->silhouette >= -1.0 && r.latent->silhouette <= 1.0))
      bad.push_back("silhouette not in [-1,1]");
    if (!(r.latent->davies_bouldin >= 0.0)) bad.push_back("davies_bouldin is negative");
    if (!(r.latent->calinski_harabasz >= 0.0)) bad.push_back("calinski_harabasz is negative");
  }
  for (const auto& q : r.qa) {
    if (q.faithfulness) rate(q.query_id + " faithfulness", *q.faithfulness);
    if (q.answer_relevancy) rate(q.query_id + " answer_relevancy", *q.answer_relevancy);
  }
  if (r.ner) {
    rate("syntactic_relevance", r.ner->syntactic_relevance);
    if (r.ner->entities_per_text < 0) bad.push_back("entities_per_text is negative");
  }
  return bad;
}

inline void check_ranges(const EvalReport& r) {
  const auto bad = range_violations(r);
  if (bad.empty()) return;
  std::string msg = "report invariant violated:";
  for (const auto& b : bad) msg += " " + b + ";";
  throw Error(msg);
}

// ---- retrieval benchmark ----

struct BenchmarkOptions {
  std::vector<std::size_t> ks{1, 5};
  std::string label;
  /// When set, receive the per-query dense and fused rankings.
  RunResult* dense_run = nullptr;
  RunResult* fused_run = nullptr;
};

inline std::size_t first_relevant_rank(const std::vector<ScoredChunk>& items,
                                       const std::set<std::string>& rel) {
  for (std::size_t i = 0; i < items.size(); ++i)
    if (rel.contains(items[i].chunk_id)) return i + 1;
  return 0;
}

inline std::vector<ScoredChunk> as_scored(const FusedResult& f) {
  std::vector<ScoredChunk> out;
  out.reserve(f.items.size());
  for (const auto& it : f.items) out.push_back({it.chunk_id, it.score});
  return out;
}

/// Runs every benchmark query twice: dense search of the original query (D)
/// and RRF over the expanded query set (F). A failing query is recorded in
/// failed_queries and excluded from the averages.
inline RetrievalReport run_retrieval_benchmark(const VectorIndex& index,
                                               const std::vector<BenchmarkQuery>& queries,
                                               const Qrels& qrels, const RetrievalConfig& cfg,
                                               const ProviderConfig& provider,
                                               const LlmBackend* llm,
                                               const BenchmarkOptions& opts = {}) {
  cfg.validate();
  RetrievalReport rep;
  rep.label = opts.label.empty() ? provider.provider_id() : opts.label;
  rep.dim = index.dim();
  rep.rrf_k = cfg.rrf_k;
  rep.num_variations = cfg.num_variations;
  std::size_t depth = cfg.top_k_per_query;
  for (auto k : opts.ks) depth = std::max(depth, k);
  RetrievalConfig run_cfg = cfg;
  run_cfg.top_k_per_query = depth;

  RunResult dense_run, fused_run;
  std::vector<RankedList> dense_lists, fused_lists;
  const auto t_all = Clock::now();
  std::vector<BenchmarkQuery> ordered = queries;
  std::sort(ordered.begin(), ordered.end(),
            [](const auto& a, const auto& b) { return a.query_id < b.query_id; });
  for (const auto& q : ordered) {
    QueryRow row;
    row.query_id = q.query_id;
    try {
      auto rel = qrels.find(q.query_id);
      if (rel == qrels.end()) throw Error("query '" + q.query_id + "' has no relevance judgments");
      auto t0 = Clock::now();
      QuerySet qs = expand_query(q.text, run_cfg, llm, q.lang);
      rep.timings.expand_s += seconds_since(t0);
      row.variations = qs.variations.size();
      row.degraded = qs.degraded;
      t0 = Clock::now();
      auto lists = gather_lists(index, qs, run_cfg, provider);
      rep.timings.search_s += seconds_since(t0);
      t0 = Clock::now();
      FusedResult fused = rrf_fuse(lists, run_cfg.rrf_k);
      if (fused.items.size() > depth) fused.items.resize(depth);
      rep.timings.fuse_s += seconds_since(t0);

      const RankedList& dense = lists.front();
      dense_run[q.query_id] = dense.items;
      fused_run[q.query_id] = as_scored(fused);
      dense_lists.push_back(dense);
      fused_lists.push_back({q.query_id, fused_run[q.query_id], ListSource::dense});
      row.dense_first_relevant = first_relevant_rank(dense.items, rel->second);
      row.fused_first_relevant = first_relevant_rank(fused_run[q.query_id], rel->second);
    } catch (const Error& e) {
      row.error = e.what();
      rep.failed_queries.push_back(q.query_id);
    }
    rep.per_query.push_back(std::move(row));
  }
  rep.timings.total_s = seconds_since(t_all);

  MetricWarnings warn;
  for (auto k : opts.ks) {
    rep.dense.recall[std::to_string(k)] = recall_at_k(dense_run, qrels, k, &warn);
    rep.fused.recall[std::to_string(k)] = recall_at_k(fused_run, qrels, k);
  }
  rep.dense.top5_rate = top5_rate(dense_run, qrels);
  rep.fused.top5_rate = top5_rate(fused_run, qrels);
  rep.dense.mean_confidence_drop = mean_confidence_drop(dense_lists);
  rep.fused.mean_confidence_drop = mean_confidence_drop(fused_lists);
  std::sort(warn.skipped_queries.begin(), warn.skipped_queries.end());
  warn.skipped_queries.erase(std::unique(warn.skipped_queries.begin(), warn.skipped_queries.end()),
                             warn.skipped_queries.end());
  rep.skipped_queries = warn.skipped_queries;
  if (opts.dense_run) *opts.dense_run = std::move(dense_run);
  if (opts.fused_run) *opts.fused_run = std::move(fused_run);
  return rep;
}

/// Seeded k-means over every indexed vector, then the three indices.
inline LatentReport run_latent_evaluation(const VectorIndex& index, std::size_t k,
                                          std::uint64_t seed) {
  std::vector<Embedding> embs;
  embs.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) embs.push_back({index.vector(i), index.provider_id()});
  const auto pts = to_points(embs);
  const auto labels = assign_clusters(pts, k, seed);
  const auto m = cluster_metrics(pts, labels);
  return {pts.size(), k, seed, m.silhouette, m.davies_bouldin, m.calinski_harabasz};
}

/// Scores one answered question. Judge or generator failures leave the
/// metric empty and are noted rather than thrown.
inline QaRow score_answer(const BenchmarkQuery& q, const Answer& answer,
                          const EvidenceContext& ctx, const JudgeBackend& judge,
                          const QuestionGenerator& gen, const TextEmbedder& embed,
                          std::size_t n_questions = 3) {
  QaRow row{q.query_id, to_string(q.category), q.text, answer.text, answer.abstained,
            std::nullopt, std::nullopt, {}};
  try {
    row.faithfulness = faithfulness(answer, ctx, judge);
  } catch (const Error& e) {
    row.note += std::string("faithfulness unavailable: ") + e.what() + ". ";
  }
  row.answer_relevancy = answer_relevancy(answer, q.text, gen, embed, n_questions);
  if (!row.answer_relevancy) row.note += "answer relevancy unavailable. ";
  if (row.answer_relevancy) row.answer_relevancy = std::clamp(*row.answer_relevancy, 0.0, 1.0);
  if (!row.note.empty()) row.note.pop_back();
  return row;
}

// ---- renderings ----

namespace detail {

inline std::string fixed(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

inline std::string render_table(const std::vector<std::string>& header,
                                const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size(), 0);
  auto measure = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], text::length(r[i]));
  };
  measure(header);
  for (const auto& r : rows) measure(r);
  auto line = [&](const std::vector<std::string>& r) {
    std::string s = "|";
    for (std::size_t i = 0; i < r.size(); ++i)
      s += " " + r[i] + std::string(width[i] - text::length(r[i]), ' ') + " |";
    return s + "\n";
  };
  std::string rule = "+";
  for (auto w : width) rule += std::string(w + 2, '-') + "+";
  rule += "\n";
  std::string out = rule + line(header) + rule;
  for (const auto& r : rows) out += line(r);
  return out + rule;
}

inline std::string opt_fixed(const std::optional<double>& v) { return v ? fixed(*v, 3) : "n/a"; }

}  // namespace detail

inline std::string render_text(const EvalReport& r) {
  std::string out;
  if (r.retrieval) {
    const auto& rt = *r.retrieval;
    auto recall = [](const RetrievalColumns& c, const char* k) {
      auto it = c.recall.find(k);
      return it == c.recall.end() ? std::string("n/a") : detail::fixed(it->second);
    };
    out += "Dense retrieval (D) vs fusion (F), rrf_k=" + std::to_string(rt.rrf_k) +
           ", variations=" + std::to_string(rt.num_variations) + "\n";
    out += detail::render_table(
        {"Model", "@1 (D)", "@5 (D)", "Δ1→2 (D)", "@1 (F)", "@5 (F)", "Δ1→2 (F)", "Time (s)"},
        {{rt.label, recall(rt.dense, "1"), recall(rt.dense, "5"),
          detail::fixed(rt.dense.mean_confidence_drop), recall(rt.fused, "1"),
          recall(rt.fused, "5"), detail::fixed(rt.fused.mean_confidence_drop),
          detail::fixed(rt.timings.total_s, 1)}});
    out += "\n";
    out += detail::render_table(
        {"Model", "Top-5", "Drop", "Time(s)", "Dim."},
        {{rt.label, detail::fixed(rt.dense.top5_rate), detail::fixed(rt.dense.mean_confidence_drop),
          detail::fixed(rt.timings.search_s, 2), std::to_string(rt.dim)}});
    if (!rt.failed_queries.empty()) {
      out += "failed queries:";
      for (const auto& q : rt.failed_queries) out += " " + q;
      out += "\n";
    }
  }
  if (r.latent) {
    out += "\n";
    out += detail::render_table(
        {"k", "Silhouette", "DB (↓)", "CH (↑)"},
        {{std::to_string(r.latent->k), detail::fixed(r.latent->silhouette),
          detail::fixed(r.latent->davies_bouldin, 2),
          detail::fixed(r.latent->calinski_harabasz, 2)}});
  }
  if (!r.qa.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& q : r.qa)
      rows.push_back({q.question + " (" + q.category + ")", detail::opt_fixed(q.faithfulness),
                      detail::opt_fixed(q.answer_relevancy), q.abstained ? "yes" : "no"});
    out += "\n";
    out += detail::render_table({"Question (Category)", "Faithfulness", "Answer Relevancy",
                                 "Abstained"},
                                rows);
  }
  if (r.ner) {
    out += "\n";
    out += detail::render_table({"SynRel", "Entities/text", "Time(s)"},
                                {{detail::fixed(r.ner->syntactic_relevance),
                                  detail::fixed(r.ner->entities_per_text, 2),
                                  detail::fixed(r.ner->seconds, 2)}});
  }
  return out;
}

/// One "section,key,value" row per scalar.
inline std::string render_csv(const EvalReport& r) {
  std::ostringstream os;
  os << std::setprecision(17) << "section,key,value\n";
  if (r.retrieval) {
    for (const auto& [side, col] :
         {std::pair{"dense", &r.retrieval->dense}, std::pair{"fused", &r.retrieval->fused}}) {
      for (const auto& [k, v] : col->recall) os << side << ",recall@" << k << ',' << v << '\n';
      os << side << ",top5_rate," << col->top5_rate << '\n';
      os << side << ",mean_confidence_drop," << col->mean_confidence_drop << '\n';
    }
    os << "timing,total_s," << r.retrieval->timings.total_s << '\n';
  }
  if (r.latent) {
    os << "latent,silhouette," << r.latent->silhouette << '\n';
    os << "latent,davies_bouldin," << r.latent->davies_bouldin << '\n';
    os << "latent,calinski_harabasz," << r.latent->calinski_harabasz << '\n';
  }
  for (const auto& q : r.qa) {
    os << "qa," << q.query_id << ".faithfulness,";
    if (q.faithfulness) os << *q.faithfulness;
    os << "\nqa," << q.query_id << ".answer_relevancy,";
    if (q.answer_relevancy) os << *q.answer_relevancy;
    os << "\nqa," << q.query_id << ".abstained," << (q.abstained ? 1 : 0) << '\n';
  }
  if (r.ner) os << "ner,syntactic_relevance," << r.ner->syntactic_relevance << '\n';
  return os.str();
}

}  // namespace archrag::eval
