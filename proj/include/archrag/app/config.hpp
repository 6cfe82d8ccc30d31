#pragma once

// Application configuration. Precedence, highest first: command-line flag,
// environment variable, JSON config file, built-in default.

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>

#include "archrag/app/mock.hpp"
#include "archrag/generation.hpp"
#include "archrag/retrieval.hpp"

namespace archrag::app {

enum class BackendKind { remote, mock, none };

inline BackendKind parse_backend_kind(const std::string& s, const char* what) {
  if (s == "remote") return BackendKind::remote;
  if (s == "mock") return BackendKind::mock;
  if (s == "none") return BackendKind::none;
  throw ConfigError(std::string("unknown ") + what + " kind '" + s + "' (remote, mock, none)");
}

inline const char* to_string(BackendKind k) {
  switch (k) {
    case BackendKind::remote: return "remote";
    case BackendKind::mock: return "mock";
    case BackendKind::none: return "none";
  }
  return "none";
}

struct AppConfig {
  // paths
  std::string corpus_path;
  std::string index_path;
  std::string templates_dir;  // empty: built-in templates
  std::string reports_dir = "reports";
  std::string mock_script;

  ProviderConfig embedding;
  BackendKind llm_kind = BackendKind::remote;
  RemoteConfig llm;
  BackendKind ner_kind = BackendKind::none;
  RemoteConfig ner;
  std::string judge = "offline";  // offline | llm
  std::size_t relevancy_questions = 3;

  RetrievalConfig retrieval;
  GenerationConfig generation;
  ChunkingOptions chunking;

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string log_level = "info";

  void validate() const {
    embedding.validate();
    retrieval.validate();
    generation.validate();
    if (judge != "offline" && judge != "llm") throw ConfigError("judge must be offline or llm");
    if (relevancy_questions < 1) throw ConfigError("relevancy_questions must be >= 1");
    if (chunking.max_tokens < 1 || chunking.overlap >= chunking.max_tokens)
      throw ConfigError("chunking needs 0 <= overlap < max_tokens");
    if ((llm_kind == BackendKind::mock || ner_kind == BackendKind::mock) && mock_script.empty())
      throw ConfigError("mock backends need a mock_script path");
    if (!templates_dir.empty()) prompts::TemplateSet::from_directory(templates_dir);
  }

  prompts::TemplateSet templates() const {
    return templates_dir.empty() ? prompts::TemplateSet{}
                                 : prompts::TemplateSet::from_directory(templates_dir);
  }
};

/// Applies the keys present in a config-file JSON object.
inline void apply_json(AppConfig& c, const json& j) {
  try {
    if (auto p = j.find("paths"); p != j.end()) {
      c.corpus_path = p->value("corpus", c.corpus_path);
      c.index_path = p->value("index", c.index_path);
      c.templates_dir = p->value("templates", c.templates_dir);
      c.reports_dir = p->value("reports", c.reports_dir);
      c.mock_script = p->value("mock_script", c.mock_script);
    }
    if (auto e = j.find("embedding"); e != j.end()) {
      if (e->contains("kind")) {
        const auto k = e->at("kind").get<std::string>();
        if (k != "remote" && k != "fallback") throw ConfigError("embedding kind must be remote or fallback");
        c.embedding.kind = k == "remote" ? ProviderKind::remote : ProviderKind::fallback;
      }
      c.embedding.base_url = e->value("base_url", c.embedding.base_url);
      c.embedding.model_name = e->value("model", c.embedding.model_name);
      c.embedding.dim = e->value("dim", c.embedding.dim);
      c.embedding.seed = e->value("seed", c.embedding.seed);
      c.embedding.batch_size = e->value("batch_size", c.embedding.batch_size);
      c.embedding.max_concurrent_requests =
          e->value("max_concurrent_requests", c.embedding.max_concurrent_requests);
      c.embedding.query_prefix = e->value("query_prefix", c.embedding.query_prefix);
      c.embedding.doc_prefix = e->value("doc_prefix", c.embedding.doc_prefix);
    }
    if (auto l = j.find("llm"); l != j.end()) {
      if (l->contains("kind")) c.llm_kind = parse_backend_kind(l->at("kind").get<std::string>(), "llm");
      c.llm.base_url = l->value("base_url", c.llm.base_url);
    }
    if (auto n = j.find("ner"); n != j.end()) {
      if (n->contains("kind")) c.ner_kind = parse_backend_kind(n->at("kind").get<std::string>(), "ner");
      c.ner.base_url = n->value("base_url", c.ner.base_url);
    }
    if (auto r = j.find("retrieval"); r != j.end()) {
      c.retrieval.num_variations = r->value("num_variations", c.retrieval.num_variations);
      c.retrieval.rrf_k = r->value("rrf_k", c.retrieval.rrf_k);
      c.retrieval.top_k_per_query = r->value("top_k_per_query", c.retrieval.top_k_per_query);
      c.retrieval.final_k = r->value("final_k", c.retrieval.final_k);
      c.retrieval.enable_lexical = r->value("lexical", c.retrieval.enable_lexical);
      c.retrieval.expansion_model = r->value("expansion_model", c.retrieval.expansion_model);
      c.retrieval.expansion_temperature =
          r->value("expansion_temperature", c.retrieval.expansion_temperature);
    }
    if (auto g = j.find("generation"); g != j.end()) {
      c.generation.model_name = g->value("model", c.generation.model_name);
      c.generation.temperature = g->value("temperature", c.generation.temperature);
      c.generation.max_output_tokens = g->value("max_output_tokens", c.generation.max_output_tokens);
      if (g->contains("faithfulness_threshold") && !g->at("faithfulness_threshold").is_null())
        c.generation.faithfulness_threshold = g->at("faithfulness_threshold").get<double>();
      if (g->contains("abstention_phrases"))
        g->at("abstention_phrases").get_to(c.generation.abstention_phrases);
    }
    if (auto ch = j.find("chunking"); ch != j.end()) {
      c.chunking.max_tokens = ch->value("max_tokens", c.chunking.max_tokens);
      c.chunking.overlap = ch->value("overlap", c.chunking.overlap);
    }
    if (auto ev = j.find("evaluation"); ev != j.end()) {
      c.judge = ev->value("judge", c.judge);
      c.relevancy_questions = ev->value("relevancy_questions", c.relevancy_questions);
    }
    if (auto s = j.find("service"); s != j.end()) {
      c.host = s->value("host", c.host);
      c.port = s->value("port", c.port);
    }
    c.log_level = j.value("log_level", c.log_level);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

inline void apply_config_file(AppConfig& c, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  apply_json(c, j);
  // Relative paths in the file are relative to the file.
  const auto base = std::filesystem::path(path).parent_path();
  for (auto* p : {&c.corpus_path, &c.index_path, &c.templates_dir, &c.mock_script})
    if (!p->empty() && std::filesystem::path(*p).is_relative() && j.contains("paths"))
      *p = (base / *p).lexically_normal().string();
}

inline void apply_env(AppConfig& c) {
  c.embedding.base_url = env_or("EMBED_API_BASE", c.embedding.base_url);
  c.embedding.api_key = env_or("EMBED_API_KEY", c.embedding.api_key);
  c.llm.base_url = env_or("LLM_API_BASE", c.llm.base_url);
  c.llm.api_key = env_or("LLM_API_KEY", c.llm.api_key);
  c.ner.base_url = env_or("NER_API_BASE", c.ner.base_url);
}

/// Backends built from a config; members are null when disabled.
struct Backends {
  std::unique_ptr<LlmBackend> llm;
  std::unique_ptr<EntityBackend> ner;
};

inline std::unique_ptr<LlmBackend> make_llm(const AppConfig& c) {
  switch (c.llm_kind) {
    case BackendKind::remote: return std::make_unique<HttpLlm>(c.llm);
    case BackendKind::mock: return std::make_unique<ScriptedLlm>(MockScript::load(c.mock_script));
    case BackendKind::none: return nullptr;
  }
  return nullptr;
}

inline std::unique_ptr<EntityBackend> make_ner(const AppConfig& c) {
  switch (c.ner_kind) {
    case BackendKind::remote: return std::make_unique<HttpEntityBackend>(c.ner);
    case BackendKind::mock:
      return std::make_unique<ScriptedEntityBackend>(MockScript::load(c.mock_script).entities);
    case BackendKind::none: return nullptr;
  }
  return nullptr;
}

}  // namespace archrag::app
