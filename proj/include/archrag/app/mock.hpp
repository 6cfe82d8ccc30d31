#pragma once

// Scripted stand-ins for the LLM, embedding and NER services, usable
// in-process or behind a local HTTP server.

#include <httplib.h>

#include <atomic>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "archrag/backends.hpp"
#include "archrag/embedding.hpp"
#include "archrag/eval/ragas.hpp"
#include "archrag/prompts.hpp"

namespace archrag::app {

struct ScriptedAnswer {
  std::string question;
  std::string answer;
  /// Evidence that must appear in the prompt's context for the answer to be
  /// given; otherwise the model abstains.
  std::string requires_evidence;
};

struct ScriptedEntity {
  std::string surface;
  std::string label;
};

/// {"expansions": {query: [lines]}, "answers": [{question, answer, requires}],
///  "entities": [{surface, label}]}
struct MockScript {
  std::map<std::string, std::vector<std::string>> expansions;
  std::vector<ScriptedAnswer> answers;
  std::vector<ScriptedEntity> entities;

  static MockScript from_json(const json& j) {
    MockScript s;
    if (j.contains("expansions")) j.at("expansions").get_to(s.expansions);
    if (j.contains("answers"))
      for (const auto& a : j.at("answers"))
        s.answers.push_back({a.at("question").get<std::string>(), a.at("answer").get<std::string>(),
                             a.value("requires", std::string{})});
    if (j.contains("entities"))
      for (const auto& e : j.at("entities"))
        s.entities.push_back({e.at("surface").get<std::string>(), e.at("label").get<std::string>()});
    return s;
  }

  static MockScript load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open mock script '" + path + "'");
    try {
      return from_json(json::parse(in));
    } catch (const json::exception& e) {
      throw ConfigError("bad mock script '" + path + "': " + e.what());
    }
  }
};

namespace detail {

inline std::string between(std::string_view s, std::string_view open, std::string_view close) {
  auto b = s.find(open);
  if (b == std::string_view::npos) return {};
  b += open.size();
  auto e = s.find(close, b);
  if (e == std::string_view::npos) e = s.size();
  return std::string(text::trim(s.substr(b, e - b)));
}

}  // namespace detail

/// Deterministic LLM that recognizes the shipped prompt templates.
/// Answers are given only when the scripted evidence is in the context and
/// otherwise replaced by the mandated abstention sentence.
class ScriptedLlm final : public LlmBackend {
 public:
  explicit ScriptedLlm(MockScript script) : script_(std::move(script)) {}

  std::string complete(const ChatRequest& req) const override {
    const std::string& p = req.prompt;
    if (p.find("Reformulate the following question") != std::string::npos) {
      const auto query = detail::between(p, "\nInput: ", "\n");
      auto n = static_cast<std::size_t>(std::stoul("0" + detail::between(p, " in ", " different")));
      auto it = script_.expansions.find(query);
      if (it == script_.expansions.end()) return {};
      std::string out;
      for (std::size_t i = 0; i < it->second.size() && i < n; ++i) out += it->second[i] + "\n";
      return out;
    }
    if (p.find("Break the following answer into atomic factual claims") != std::string::npos) {
      std::string out;
      for (const auto& c : eval::split_sentences(detail::between(p, "Answer: ", "\nClaims:")))
        out += c + "\n";
      return out;
    }
    if (p.find("Decide whether the claim is directly supported") != std::string::npos) {
      const auto ctx = detail::between(p, "Context: ", "\nClaim: ");
      const auto claim = detail::between(p, "\nClaim: ", "\nVerdict:");
      return eval::OfflineJudge{}.supported(claim, ctx) ? "yes" : "no";
    }
    if (p.find("questions that the following answer responds to") != std::string::npos) {
      const auto answer = detail::between(p, "Answer: ", "\nQuestions:");
      const auto n = std::stoul("0" + detail::between(p, "Write ", " distinct"));
      std::string q = answer;
      for (const auto& a : script_.answers)
        if (text::trim(a.answer) == answer) q = a.question;
      std::string out;
      for (std::size_t i = 0; i < n; ++i) out += q + "\n";
      return out;
    }
    const auto qpos = p.rfind("Question: ");
    if (qpos != std::string::npos) {
      const auto question = detail::between(std::string_view(p).substr(qpos), "Question: ", "\n");
      const std::string_view context = std::string_view(p).substr(0, qpos);
      for (const auto& a : script_.answers) {
        if (a.question != question) continue;
        if (a.requires_evidence.empty() || context.find(a.requires_evidence) != std::string::npos)
          return a.answer;
      }
      return std::string(prompts::kAbstentionEn);
    }
    return {};
  }

  const MockScript& script() const noexcept { return script_; }

 private:
  MockScript script_;
};

/// Gazetteer recognizer: every occurrence of a scripted surface form.
class ScriptedEntityBackend final : public EntityBackend {
 public:
  explicit ScriptedEntityBackend(std::vector<ScriptedEntity> gazetteer)
      : gazetteer_(std::move(gazetteer)) {}

  std::vector<std::vector<RawEntity>> recognize(const std::vector<std::string>& texts,
                                                const std::string&) const override {
    std::vector<std::vector<RawEntity>> out;
    for (const auto& t : texts) {
      auto& ents = out.emplace_back();
      for (const auto& g : gazetteer_) {
        if (g.surface.empty()) continue;
        for (auto pos = t.find(g.surface); pos != std::string::npos;
             pos = t.find(g.surface, pos + g.surface.size())) {
          const auto start = text::length(std::string_view(t).substr(0, pos));
          ents.push_back({g.surface, g.label, start, start + text::length(g.surface)});
        }
      }
      std::stable_sort(ents.begin(), ents.end(),
                       [](const RawEntity& a, const RawEntity& b) { return a.start < b.start; });
    }
    return out;
  }

 private:
  std::vector<ScriptedEntity> gazetteer_;
};

struct MockServerOptions {
  std::size_t embed_dim = 256;
  std::uint64_t embed_seed = 0;
  /// The first N requests get HTTP 503.
  std::size_t fail_first = 0;
  /// Every request gets HTTP 503.
  bool always_fail = false;
};

/// Serves /v1/chat/completions, /v1/embed and /v1/entities on 127.0.0.1.
class MockBackendServer {
 public:
  MockBackendServer(MockScript script, MockServerOptions opts = {})
      : llm_(script), ner_(script.entities), opts_(opts) {
    auto guarded = [this](auto handler) {
      return [this, handler](const httplib::Request& req, httplib::Response& res) {
        ++requests_;
        if (opts_.always_fail || failures_.fetch_add(1) < opts_.fail_first) {
          res.status = 503;
          res.set_content(R"({"error":"injected failure"})", "application/json");
          return;
        }
        try {
          res.set_content(handler(json::parse(req.body)).dump(), "application/json");
        } catch (const std::exception& e) {
          res.status = 400;
          res.set_content(json{{"error", e.what()}}.dump(), "application/json");
        }
      };
    };
    server_.Post("/v1/chat/completions", guarded([this](const json& body) {
                   ChatRequest req;
                   req.model = body.value("model", std::string{});
                   req.prompt = body.at("messages").back().at("content").get<std::string>();
                   req.temperature = body.value("temperature", 0.0);
                   return json{{"choices",
                                json::array({{{"message",
                                               {{"role", "assistant"},
                                                {"content", llm_.complete(req)}}}}})}};
                 }));
    server_.Post("/v1/embed", guarded([this](const json& body) {
                   json vectors = json::array();
                   for (const auto& t : body.at("texts"))
                     vectors.push_back(
                         fallback_vector(t.get<std::string>(), opts_.embed_dim, opts_.embed_seed));
                   return json{{"dim", opts_.embed_dim}, {"vectors", vectors}};
                 }));
    server_.Post("/v1/entities", guarded([this](const json& body) {
                   const auto texts = body.at("texts").get<std::vector<std::string>>();
                   json results = json::array();
                   for (const auto& ents : ner_.recognize(texts, body.value("lang", std::string{}))) {
                     json arr = json::array();
                     for (const auto& e : ents)
                       arr.push_back({{"surface", e.surface}, {"label", e.label},
                                      {"start", e.start}, {"end", e.end}});
                     results.push_back(arr);
                   }
                   return json{{"results", results}};
                 }));
  }

  ~MockBackendServer() { stop(); }
  MockBackendServer(const MockBackendServer&) = delete;
  MockBackendServer& operator=(const MockBackendServer&) = delete;

  /// Binds an ephemeral port (or `port`) and serves on a background thread.
  void start(int port = 0) {
    port_ = port == 0 ? server_.bind_to_any_port("127.0.0.1")
                      : (server_.bind_to_port("127.0.0.1", port) ? port : -1);
    if (port_ < 0) throw Error("mock backend could not bind");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  /// Blocks serving on the calling thread.
  void run(const std::string& host, int port) {
    if (!server_.listen(host, port)) throw Error("mock backend could not listen on port " + std::to_string(port));
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  int port() const noexcept { return port_; }
  std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::size_t request_count() const noexcept { return requests_.load(); }

 private:
  ScriptedLlm llm_;
  ScriptedEntityBackend ner_;
  MockServerOptions opts_;
  httplib::Server server_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> failures_{0};
};

}  // namespace archrag::app
