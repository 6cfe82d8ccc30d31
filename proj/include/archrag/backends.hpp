#pragma once

// Interfaces for the external model services the engine consumes, and their
// HTTP clients.

#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include "archrag/http.hpp"

namespace archrag {

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.3;
  int max_tokens = 512;
};

/// Single-turn text completion.
class LlmBackend {
 public:
  virtual ~LlmBackend() = default;
  virtual std::string complete(const ChatRequest& request) const = 0;
};

struct RemoteConfig {
  std::string base_url;
  std::string api_key;
  RetryPolicy retry;
};

inline std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return (v && *v) ? std::string(v) : std::move(fallback);
}

/// Chat-completions client: POST {base}/v1/chat/completions.
class HttpLlm final : public LlmBackend {
 public:
  explicit HttpLlm(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
      throw ConfigError("LLM backend has no base URL (set LLM_API_BASE)");
  }

  std::string complete(const ChatRequest& req) const override {
    json body = {{"model", req.model},
                 {"messages", json::array({{{"role", "user"}, {"content", req.prompt}}})},
                 {"temperature", req.temperature},
                 {"max_tokens", req.max_tokens}};
    const json reply =
        post_json("llm", cfg_.base_url, "/v1/chat/completions", body, cfg_.retry, cfg_.api_key);
    try {
      const auto& content = reply.at("choices").at(0).at("message").at("content");
      return content.is_null() ? std::string{} : content.get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError("llm", std::string("unexpected response shape: ") + e.what(), 200,
                         false);
    }
  }

 private:
  RemoteConfig cfg_;
};

/// Entity as reported by a recognizer, before validation against the text.
struct RawEntity {
  std::string surface;
  std::string label;
  std::size_t start = 0;
  std::size_t end = 0;
};

class EntityBackend {
 public:
  virtual ~EntityBackend() = default;
  /// One result list per input text, in order.
  virtual std::vector<std::vector<RawEntity>> recognize(const std::vector<std::string>& texts,
                                                        const std::string& lang) const = 0;
};

/// NER client: POST {base}/v1/entities.
class HttpEntityBackend final : public EntityBackend {
 public:
  explicit HttpEntityBackend(RemoteConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty())
      throw ConfigError("NER backend has no base URL (set NER_API_BASE)");
  }

  std::vector<std::vector<RawEntity>> recognize(const std::vector<std::string>& texts,
                                                const std::string& lang) const override {
    const json reply = post_json("ner", cfg_.base_url, "/v1/entities",
                                 {{"texts", texts}, {"lang", lang}}, cfg_.retry, cfg_.api_key);
    std::vector<std::vector<RawEntity>> out;
    try {
      for (const auto& per_text : reply.at("results")) {
        auto& ents = out.emplace_back();
        for (const auto& e : per_text)
          ents.push_back({e.at("surface").get<std::string>(), e.at("label").get<std::string>(),
                          e.at("start").get<std::size_t>(), e.at("end").get<std::size_t>()});
      }
    } catch (const json::exception& e) {
      throw BackendError("ner", std::string("unexpected response shape: ") + e.what(), 200,
                         false);
    }
    if (out.size() != texts.size())
      throw BackendError("ner", "result count does not match input count", 200, false);
    return out;
  }

 private:
  RemoteConfig cfg_;
};

}  // namespace archrag
