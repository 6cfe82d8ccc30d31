#pragma once

// Command-line front end: ingest, index, search, ask, eval, serve, bench.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "archrag/app/service.hpp"
#include "archrag/eval/benchmark.hpp"

namespace archrag::app {

struct CommonFlags {
  std::string config;
  std::optional<std::string> embed_kind, embed_base, embed_model, llm_kind, llm_base, mock_script,
      templates;
  std::optional<std::size_t> embed_dim;
  std::optional<std::uint64_t> embed_seed;
};

inline void add_common(CLI::App& sub, CommonFlags& f) {
  sub.add_option("--config", f.config, "JSON config file");
  sub.add_option("--embed-kind", f.embed_kind, "fallback | remote")
      ->check(CLI::IsMember({"fallback", "remote"}));
  sub.add_option("--embed-base", f.embed_base, "embedding service base URL");
  sub.add_option("--embed-model", f.embed_model, "embedding model name");
  sub.add_option("--embed-dim", f.embed_dim, "embedding dimension");
  sub.add_option("--embed-seed", f.embed_seed, "fallback hashing seed");
  sub.add_option("--llm", f.llm_kind, "remote | mock | none")
      ->check(CLI::IsMember({"remote", "mock", "none"}));
  sub.add_option("--llm-base", f.llm_base, "LLM service base URL");
  sub.add_option("--mock-script", f.mock_script, "scripted responses for mock backends");
  sub.add_option("--templates", f.templates, "directory of *.v1.txt prompt templates");
}

inline AppConfig resolve_config(const CommonFlags& f) {
  AppConfig c;
  if (!f.config.empty()) apply_config_file(c, f.config);
  apply_env(c);
  if (f.embed_kind)
    c.embedding.kind = *f.embed_kind == "remote" ? ProviderKind::remote : ProviderKind::fallback;
  if (f.embed_base) c.embedding.base_url = *f.embed_base;
  if (f.embed_model) c.embedding.model_name = *f.embed_model;
  if (f.embed_dim) c.embedding.dim = *f.embed_dim;
  if (f.embed_seed) c.embedding.seed = *f.embed_seed;
  if (f.llm_kind) c.llm_kind = parse_backend_kind(*f.llm_kind, "llm");
  if (f.llm_base) c.llm.base_url = *f.llm_base;
  if (f.mock_script) c.mock_script = *f.mock_script;
  if (f.templates) c.templates_dir = *f.templates;
  return c;
}

/// Rewrites embedding failures so the message names the variable to fix.
[[noreturn]] inline void rethrow_embedding(const BackendError& e, const AppConfig& c) {
  if (e.component() == "embedding")
    throw BackendError("embedding",
                       "embedding service at '" + c.embedding.base_url +
                           "' (EMBED_API_BASE) failed: " + e.what(),
                       e.status(), e.retryable());
  throw e;
}

inline std::shared_ptr<const VectorIndex> open_index(const std::string& path) {
  if (path.empty()) throw ConfigError("no index path given (--index or paths.index)");
  if (!std::filesystem::exists(path)) throw Error("index file '" + path + "' does not exist");
  auto idx = std::make_shared<VectorIndex>(VectorIndex::load(path));
  idx->seal();
  return idx;
}

inline std::string fmt_double(double v, int prec = 6) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

inline void print_fused(std::ostream& out, const FusedResult& fused, const VectorIndex& index) {
  for (std::size_t i = 0; i < fused.items.size(); ++i) {
    const auto& it = fused.items[i];
    out << (i + 1) << ". " << it.chunk_id << "  score=" << fmt_double(it.score)
        << "  doc=" << index.meta(it.chunk_id).doc_id << "  [";
    for (std::size_t c = 0; c < it.contributing.size(); ++c)
      out << (c ? ", " : "") << it.contributing[c].query_id << "#" << it.contributing[c].rank;
    out << "]\n";
  }
}

inline void print_ask(std::ostream& out, const AskResponse& r) {
  if (r.answer.abstained)
    out << "ABSTAINED: " << r.answer.text << "\n";
  else
    out << "Answer: " << r.answer.text << "\n";
  out << "\nEvidence:\n";
  for (const auto& g : r.evidence) {
    out << "  [" << g.title << " | " << g.doc_id << "]\n";
    for (const auto& p : g.passages)
      out << "    " << p.fused_rank << ". " << p.chunk_id << "  score=" << fmt_double(p.fused_score)
          << "\n";
  }
  out << "\nTimings (s): expand=" << fmt_double(r.timings.expand_s, 4)
      << " search=" << fmt_double(r.timings.search_s, 4)
      << " fuse=" << fmt_double(r.timings.fuse_s, 4)
      << " generate=" << fmt_double(r.timings.generate_s, 4) << "\n";
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  f << content;
}

namespace detail {
inline std::atomic<bool> g_stop_requested{false};
inline void on_stop_signal(int) { g_stop_requested = true; }
}  // namespace detail

/// Entry point shared by the binary and the tests. Returns the exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hybrid retrieval and grounded answering over document archives", "archrag"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // ingest
  CommonFlags f_ingest;
  std::string in_path, out_path, ner_kind = "none", ner_base;
  std::size_t max_tokens = 0, overlap = 0;
  bool no_preprocess = false;
  auto* ingest = app.add_subcommand("ingest", "Clean, chunk and annotate a JSONL corpus");
  add_common(*ingest, f_ingest);
  ingest->add_option("--input,-i", in_path, "raw documents (JSONL)")->required();
  ingest->add_option("--output,-o", out_path, "chunk file to write (JSONL)")->required();
  ingest->add_option("--max-tokens", max_tokens, "chunk size in whitespace tokens");
  ingest->add_option("--overlap", overlap, "tokens shared by consecutive chunks");
  ingest->add_flag("--no-preprocess", no_preprocess, "skip text cleaning");
  ingest->add_option("--ner", ner_kind, "none | remote | mock")
      ->check(CLI::IsMember({"none", "remote", "mock"}));
  ingest->add_option("--ner-base", ner_base, "NER service base URL");

  // index
  CommonFlags f_index;
  std::string idx_corpus, idx_out;
  auto* index_cmd = app.add_subcommand("index", "Embed a corpus and write a vector index");
  add_common(*index_cmd, f_index);
  index_cmd->add_option("--corpus,-c", idx_corpus, "chunk file or raw documents");
  index_cmd->add_option("--output,-o", idx_out, "index file to write");

  // search
  CommonFlags f_search;
  std::string s_index, s_query, s_lang;
  std::optional<std::size_t> s_k, s_expand;
  std::optional<int> s_rrf;
  bool s_lexical = false;
  auto* search = app.add_subcommand("search", "Fused ranking for a query");
  add_common(*search, f_search);
  search->add_option("--index", s_index, "index file");
  search->add_option("--query,-q", s_query, "query text")->required();
  search->add_option("--k", s_k, "number of fused results");
  search->add_option("--expand", s_expand, "number of LLM reformulations (0 disables)");
  search->add_option("--rrf-k", s_rrf, "RRF smoothing constant");
  search->add_flag("--lexical", s_lexical, "add BM25 lists to the fusion");
  search->add_option("--lang", s_lang, "query language");

  // ask
  CommonFlags f_ask;
  std::string a_index, a_question, a_lang;
  std::optional<std::size_t> a_k, a_expand;
  bool a_json = false;
  auto* ask = app.add_subcommand("ask", "Answer a question from retrieved evidence");
  add_common(*ask, f_ask);
  ask->add_option("--index", a_index, "index file");
  ask->add_option("--question,-q", a_question, "question text")->required();
  ask->add_option("--lang", a_lang, "question language (guessed when empty)");
  ask->add_option("--k", a_k, "passages given to the generator");
  ask->add_option("--expand", a_expand, "number of LLM reformulations (0 disables)");
  ask->add_flag("--json", a_json, "print the response as JSON");

  // eval
  CommonFlags f_eval;
  std::string e_index, e_queries, e_qrels, e_qa, e_out, e_judge, e_label, e_ner_corpus;
  std::optional<std::size_t> e_expand;
  bool e_latent = false, e_csv = false;
  std::size_t e_latent_k = 4;
  std::uint64_t e_latent_seed = 42;
  auto* eval_cmd = app.add_subcommand("eval", "Retrieval benchmark and answer-quality report");
  add_common(*eval_cmd, f_eval);
  eval_cmd->add_option("--index", e_index, "index file");
  eval_cmd->add_option("--queries", e_queries, "benchmark queries (JSONL)");
  eval_cmd->add_option("--qrels", e_qrels, "relevance judgments (TREC)");
  eval_cmd->add_option("--qa", e_qa, "questions to answer and score (JSONL)");
  eval_cmd->add_option("--out", e_out, "report directory");
  eval_cmd->add_option("--expand", e_expand, "number of LLM reformulations");
  eval_cmd->add_option("--judge", e_judge, "offline | llm")->check(CLI::IsMember({"offline", "llm"}));
  eval_cmd->add_option("--label", e_label, "row label in the tables");
  eval_cmd->add_flag("--latent", e_latent, "add clustering indices of the index vectors");
  eval_cmd->add_option("--latent-k", e_latent_k, "number of k-means clusters");
  eval_cmd->add_option("--latent-seed", e_latent_seed, "k-means seed");
  eval_cmd->add_flag("--csv", e_csv, "also write report.csv");
  eval_cmd->add_option("--ner-corpus", e_ner_corpus, "chunk file whose entities are scored");

  // serve
  CommonFlags f_serve;
  std::string v_index, v_host;
  std::optional<int> v_port;
  auto* serve = app.add_subcommand("serve", "HTTP service over an index");
  add_common(*serve, f_serve);
  serve->add_option("--index", v_index, "index file");
  serve->add_option("--host", v_host, "bind address");
  serve->add_option("--port", v_port, "port (0 picks a free one)");

  // bench
  CommonFlags f_bench;
  std::string b_corpus, b_index, b_queries;
  std::size_t b_repeat = 1;
  bool b_ask = false, b_json = false;
  auto* bench = app.add_subcommand("bench", "Per-phase wall-clock timings");
  add_common(*bench, f_bench);
  bench->add_option("--corpus", b_corpus, "raw documents; times ingest and indexing");
  bench->add_option("--index", b_index, "existing index (used when --corpus is absent)");
  bench->add_option("--queries", b_queries, "queries (JSONL)");
  bench->add_option("--repeat", b_repeat, "passes over the queries")->check(CLI::PositiveNumber);
  bench->add_flag("--ask", b_ask, "also time answer generation");
  bench->add_flag("--json", b_json, "print timings as JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (ingest->parsed()) {
      AppConfig c = resolve_config(f_ingest);
      if (max_tokens) c.chunking.max_tokens = max_tokens;
      if (ingest->count("--overlap")) c.chunking.overlap = overlap;
      c.ner_kind = parse_backend_kind(ner_kind, "ner");
      if (!ner_base.empty()) c.ner.base_url = ner_base;
      if (c.ner_kind == BackendKind::mock && c.mock_script.empty())
        throw ConfigError("--ner mock needs --mock-script");
      LoadOptions lo{c.chunking, {!no_preprocess}};
      if (lo.chunking.overlap >= lo.chunking.max_tokens)
        throw ConfigError("--overlap must be smaller than --max-tokens");
      Corpus corpus = load_corpus(in_path, lo);
      auto ner = make_ner(c);
      annotate_corpus(corpus, ner.get(), c.embedding.max_concurrent_requests);
      save_chunks(corpus, out_path);
      out << corpus.manifest.document_count << " documents, " << corpus.chunks.size()
          << " chunks, " << corpus.manifest.dropped_entities << " dropped entities -> " << out_path
          << "\n";
      return 0;
    }

    if (index_cmd->parsed()) {
      AppConfig c = resolve_config(f_index);
      const std::string corpus_path = idx_corpus.empty() ? c.corpus_path : idx_corpus;
      const std::string dest = idx_out.empty() ? c.index_path : idx_out;
      if (corpus_path.empty()) throw ConfigError("no corpus given (--corpus or paths.corpus)");
      if (dest.empty()) throw ConfigError("no output given (--output or paths.index)");
      c.embedding.validate();
      const Corpus corpus = load_any_corpus(corpus_path, {c.chunking, {}});
      VectorIndex idx;
      try {
        idx = build_index(corpus, c.embedding);
      } catch (const BackendError& e) {
        rethrow_embedding(e, c);
      }
      idx.save(dest);
      out << "count=" << idx.size() << " dim=" << idx.dim() << " provider=" << idx.provider_id()
          << " -> " << dest << "\n";
      return 0;
    }

    if (search->parsed()) {
      AppConfig c = resolve_config(f_search);
      RetrievalConfig rc = c.retrieval;
      if (s_k) rc.final_k = *s_k;
      if (s_expand) rc.num_variations = *s_expand;
      if (s_rrf) rc.rrf_k = *s_rrf;
      if (s_lexical) rc.enable_lexical = true;
      rc.validate();
      auto index = open_index(s_index.empty() ? c.index_path : s_index);
      std::shared_ptr<const LlmBackend> llm;
      if (rc.num_variations > 0) llm = make_llm(c);
      Engine engine(c, index, llm);
      SearchResult r;
      try {
        r = engine.search(s_query, rc, s_lang);
      } catch (const BackendError& e) {
        rethrow_embedding(e, c);
      }
      out << "# query: " << s_query << " | rrf_k=" << rc.rrf_k << " | k=" << rc.final_k
          << " | variations=" << r.queries.variations.size() << "/" << rc.num_variations
          << " | lexical=" << (rc.enable_lexical ? "on" : "off") << "\n";
      for (std::size_t i = 0; i < r.queries.variations.size(); ++i)
        out << "# q" << (i + 1) << ": " << r.queries.variations[i] << "\n";
      if (r.queries.degraded) out << "# expansion degraded: " << r.queries.degradation_reason << "\n";
      print_fused(out, r.fused, *index);
      return 0;
    }

    if (ask->parsed()) {
      AppConfig c = resolve_config(f_ask);
      if (a_k) c.retrieval.final_k = *a_k;
      if (a_expand) c.retrieval.num_variations = *a_expand;
      c.validate();
      auto llm = std::shared_ptr<const LlmBackend>(make_llm(c));
      if (!llm) throw ConfigError("ask needs an LLM backend (set LLM_API_BASE or --llm mock)");
      Engine engine(c, open_index(a_index.empty() ? c.index_path : a_index), llm);
      AskResponse r;
      try {
        r = engine.ask(a_question, a_lang);
      } catch (const BackendError& e) {
        rethrow_embedding(e, c);
      }
      if (a_json)
        out << json(r).dump(2) << "\n";
      else
        print_ask(out, r);
      return 0;
    }

    if (eval_cmd->parsed()) {
      AppConfig c = resolve_config(f_eval);
      if (e_expand) c.retrieval.num_variations = *e_expand;
      if (!e_judge.empty()) c.judge = e_judge;
      c.validate();
      if (e_queries.empty() && e_qa.empty() && !e_latent && e_ner_corpus.empty())
        throw ConfigError("nothing to evaluate: give --queries/--qrels, --qa, --latent or --ner-corpus");
      auto index = open_index(e_index.empty() ? c.index_path : e_index);
      std::shared_ptr<const LlmBackend> llm;
      if (c.retrieval.num_variations > 0 || !e_qa.empty() || c.judge == "llm") llm = make_llm(c);
      eval::EvalReport report;
      eval::RunResult dense_run, fused_run;
      if (!e_queries.empty()) {
        if (e_qrels.empty()) throw ConfigError("--queries needs --qrels");
        eval::BenchmarkOptions bo;
        bo.label = e_label;
        bo.dense_run = &dense_run;
        bo.fused_run = &fused_run;
        report.retrieval = eval::run_retrieval_benchmark(*index, eval::read_queries(e_queries),
                                                         eval::read_qrels(e_qrels), c.retrieval,
                                                         c.embedding, llm.get(), bo);
      }
      if (e_latent) report.latent = eval::run_latent_evaluation(*index, e_latent_k, e_latent_seed);
      if (!e_qa.empty()) {
        if (!llm) throw ConfigError("--qa needs an LLM backend (set LLM_API_BASE or --llm mock)");
        Engine engine(c, index, llm);
        std::unique_ptr<eval::JudgeBackend> judge;
        std::unique_ptr<eval::QuestionGenerator> gen;
        if (c.judge == "llm") {
          judge = std::make_unique<eval::LlmJudge>(*llm, c.generation.model_name, engine.templates());
          gen = std::make_unique<eval::LlmQuestionGenerator>(*llm, c.generation.model_name,
                                                             engine.templates());
        } else {
          judge = std::make_unique<eval::OfflineJudge>();
          gen = std::make_unique<eval::EchoQuestionGenerator>();
        }
        const auto embedder = eval::provider_embedder(c.embedding);
        for (const auto& q : eval::read_queries(e_qa)) {
          const AskResponse r = engine.ask(q.text, q.lang);
          report.qa.push_back(eval::score_answer(q, r.answer, Engine::context_of(r), *judge, *gen,
                                                 embedder, c.relevancy_questions));
        }
      }
      if (!e_ner_corpus.empty()) {
        const Corpus corpus = load_chunks(e_ner_corpus);
        std::vector<std::vector<Entity>> sets;
        std::size_t total = 0;
        for (const auto& ch : corpus.chunks) {
          sets.push_back(ch.entities);
          total += ch.entities.size();
        }
        report.ner = eval::NerReport{
            eval::syntactic_relevance(sets),
            corpus.chunks.empty() ? 0.0
                                  : static_cast<double>(total) / static_cast<double>(corpus.chunks.size()),
            0.0};
      }
      const auto violations = eval::range_violations(report);
      const std::string table = eval::render_text(report);
      const std::filesystem::path dir = e_out.empty() ? c.reports_dir : e_out;
      std::filesystem::create_directories(dir);
      write_file(dir / "report.json", json(report).dump(2) + "\n");
      write_file(dir / "report.txt", table);
      if (e_csv) write_file(dir / "report.csv", eval::render_csv(report));
      if (report.retrieval) {
        std::ostringstream d, f;
        eval::write_run(dense_run, "dense", d);
        eval::write_run(fused_run, "fused", f);
        write_file(dir / "run.dense.txt", d.str());
        write_file(dir / "run.fused.txt", f.str());
      }
      out << table;
      out << "report written to " << (dir / "report.json").string() << "\n";
      for (const auto& v : violations) err << "invariant violated: " << v << "\n";
      return violations.empty() ? 0 : 3;
    }

    if (serve->parsed()) {
      AppConfig c = resolve_config(f_serve);
      if (!v_host.empty()) c.host = v_host;
      if (v_port) c.port = *v_port;
      c.validate();
      const std::string path = v_index.empty() ? c.index_path : v_index;
      if (path.empty()) throw ConfigError("no index path given (--index or paths.index)");
      std::shared_ptr<const LlmBackend> llm;
      if (c.llm_kind != BackendKind::none) llm = make_llm(c);
      Service svc(c, llm);
      const int port = svc.bind(c.host, c.port);
      std::atomic<bool> load_failed{false};
      svc.load_index_async(path, [&](const std::string& what) {
        err << "index load failed: " << what << "\n";
        load_failed = true;
        detail::g_stop_requested = true;
      });
      detail::g_stop_requested = false;
      std::signal(SIGINT, detail::on_stop_signal);
      std::signal(SIGTERM, detail::on_stop_signal);
      out << "listening on " << c.host << ":" << port << "\n" << std::flush;
      std::thread watcher([&] {
        while (!detail::g_stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        svc.stop();
      });
      svc.run();
      detail::g_stop_requested = true;
      watcher.join();
      svc.stop();
      return load_failed ? 1 : 0;
    }

    if (bench->parsed()) {
      AppConfig c = resolve_config(f_bench);
      c.validate();
      using Clock = std::chrono::steady_clock;
      auto secs = [](Clock::time_point t0) {
        return std::chrono::duration<double>(Clock::now() - t0).count();
      };
      std::vector<std::pair<std::string, double>> phases;
      std::shared_ptr<const VectorIndex> index;
      if (!b_corpus.empty()) {
        auto t0 = Clock::now();
        const Corpus corpus = load_any_corpus(b_corpus, {c.chunking, {}});
        phases.emplace_back("ingest", secs(t0));
        t0 = Clock::now();
        VectorIndex built;
        try {
          built = build_index(corpus, c.embedding);
        } catch (const BackendError& e) {
          rethrow_embedding(e, c);
        }
        phases.emplace_back("index", secs(t0));
        index = std::make_shared<const VectorIndex>(std::move(built));
      } else {
        const auto t0 = Clock::now();
        index = open_index(b_index.empty() ? c.index_path : b_index);
        phases.emplace_back("load_index", secs(t0));
      }
      if (!b_queries.empty()) {
        std::shared_ptr<const LlmBackend> llm;
        if (c.retrieval.num_variations > 0 || b_ask) llm = make_llm(c);
        Engine engine(c, index, llm);
        const auto queries = eval::read_queries(b_queries);
        AskTimings total;
        for (std::size_t rep = 0; rep < b_repeat; ++rep)
          for (const auto& q : queries) {
            AskTimings t;
            if (b_ask) {
              t = engine.ask(q.text, q.lang).timings;
            } else {
              t = engine.search(q.text, c.retrieval, q.lang).timings;
            }
            total.expand_s += t.expand_s;
            total.search_s += t.search_s;
            total.fuse_s += t.fuse_s;
            total.generate_s += t.generate_s;
          }
        phases.emplace_back("expand", total.expand_s);
        phases.emplace_back("search", total.search_s);
        phases.emplace_back("fuse", total.fuse_s);
        if (b_ask) phases.emplace_back("generate", total.generate_s);
        phases.emplace_back("queries", static_cast<double>(queries.size() * b_repeat));
      }
      if (b_json) {
        json j = json::object();
        for (const auto& [k, v] : phases) j[k] = v;
        j["index_count"] = index->size();
        j["dim"] = index->dim();
        out << j.dump(2) << "\n";
      } else {
        out << "provider=" << index->provider_id() << " count=" << index->size()
            << " dim=" << index->dim() << "\n";
        for (const auto& [k, v] : phases)
          out << std::left << std::setw(12) << k << (k == "queries" ? fmt_double(v, 0) : fmt_double(v, 4))
              << "\n";
      }
      return 0;
    }
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const BackendError& e) {
    err << "backend error (" << e.component() << "): " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace archrag::app
