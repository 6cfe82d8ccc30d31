#pragma once

// Read-only HTTP service over a loaded index.
//   GET  /health  -> {"status":"ok","index_count":n} (503 while loading)
//   POST /search  {"query":str,"k":int,"expand":int,"lexical":bool}
//   POST /ask     {"question":str,"lang":str}

#include <httplib.h>

#include <mutex>
#include <thread>

#include "archrag/app/pipeline.hpp"

namespace archrag::app {

inline json fused_to_json(const FusedResult& fused, const VectorIndex& index) {
  json items = json::array();
  for (std::size_t i = 0; i < fused.items.size(); ++i) {
    const auto& it = fused.items[i];
    json contrib = json::array();
    for (const auto& c : it.contributing) contrib.push_back({{"list", c.query_id}, {"rank", c.rank}});
    items.push_back({{"rank", i + 1},
                     {"chunk_id", it.chunk_id},
                     {"doc_id", index.meta(it.chunk_id).doc_id},
                     {"score", it.score},
                     {"contributing", contrib}});
  }
  return items;
}

class Service {
 public:
  explicit Service(AppConfig cfg, std::shared_ptr<const LlmBackend> llm = nullptr)
      : cfg_(std::move(cfg)), llm_(std::move(llm)) {
    server_.new_task_queue = [] { return new httplib::ThreadPool(8); };
    server_.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
      auto e = engine();
      if (!e) return reply(res, 503, {{"status", "loading"}});
      reply(res, 200, {{"status", "ok"}, {"index_count", e->index().size()}});
    });
    server_.Post("/search", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&](const Engine& e) {
        const json body = parse_body(req);
        const std::string query = required_string(body, "query");
        RetrievalConfig rc = e.config().retrieval;
        if (body.contains("k")) rc.final_k = positive(body, "k");
        if (body.contains("expand")) rc.num_variations = non_negative(body, "expand");
        if (body.contains("lexical")) {
          if (!body.at("lexical").is_boolean()) throw BadRequest("'lexical' must be a boolean");
          rc.enable_lexical = body.at("lexical").get<bool>();
        }
        const auto r = e.search(query, rc);
        return json{{"query", query},
                    {"rrf_k", rc.rrf_k},
                    {"variations", r.queries.variations},
                    {"expansion_degraded", r.queries.degraded},
                    {"results", fused_to_json(r.fused, e.index())}};
      });
    });
    server_.Post("/ask", [this](const httplib::Request& req, httplib::Response& res) {
      handle(res, [&](const Engine& e) {
        const json body = parse_body(req);
        const std::string question = required_string(body, "question");
        std::string lang;
        if (body.contains("lang")) {
          if (!body.at("lang").is_string()) throw BadRequest("'lang' must be a string");
          lang = body.at("lang").get<std::string>();
        }
        return json(e.ask(question, lang));
      });
    });
  }

  ~Service() { stop(); }
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  void set_engine(std::shared_ptr<const Engine> e) {
    std::lock_guard lk(mu_);
    engine_ = std::move(e);
  }

  /// Loads the index on a background thread; /health reports 503 until done.
  void load_index_async(const std::string& path, std::function<void(const std::string&)> on_error = {}) {
    loader_ = std::thread([this, path, on_error] {
      try {
        auto idx = std::make_shared<VectorIndex>(VectorIndex::load(path));
        idx->seal();
        set_engine(std::make_shared<const Engine>(cfg_, std::move(idx), llm_));
      } catch (const std::exception& ex) {
        if (on_error) on_error(ex.what());
      }
    });
  }

  /// Binds host:port (0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port) {
    port_ = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (port_ < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port_;
  }

  /// Serves until stop(). In-flight requests finish before it returns.
  void run() { server_.listen_after_bind(); }

  void start_background() {
    thread_ = std::thread([this] { run(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
    if (loader_.joinable()) loader_.join();
  }

  int port() const noexcept { return port_; }

 private:
  struct BadRequest : Error {
    using Error::Error;
  };

  std::shared_ptr<const Engine> engine() const {
    std::lock_guard lk(mu_);
    return engine_;
  }

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static json parse_body(const httplib::Request& req) {
    try {
      json j = json::parse(req.body);
      if (!j.is_object()) throw BadRequest("body must be a JSON object");
      return j;
    } catch (const json::parse_error& e) {
      throw BadRequest(std::string("malformed JSON body: ") + e.what());
    }
  }

  static std::string required_string(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string())
      throw BadRequest(std::string("'") + key + "' must be a string");
    std::string s = j.at(key).get<std::string>();
    if (text::trim(s).empty()) throw BadRequest(std::string("'") + key + "' is empty");
    return s;
  }

  static std::size_t non_negative(const json& j, const char* key) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw BadRequest(std::string("'") + key + "' must be a non-negative integer");
    return v.get<std::size_t>();
  }

  static std::size_t positive(const json& j, const char* key) {
    const auto n = non_negative(j, key);
    if (n == 0) throw BadRequest(std::string("'") + key + "' must be >= 1");
    return n;
  }

  template <typename F>
  void handle(httplib::Response& res, F&& f) {
    auto e = engine();
    if (!e) return reply(res, 503, {{"error", "index is loading"}});
    try {
      reply(res, 200, f(*e));
    } catch (const BadRequest& ex) {
      reply(res, 400, {{"error", ex.what()}});
    } catch (const BackendError& ex) {
      reply(res, 502, {{"error", ex.what()}, {"component", ex.component()}});
    } catch (const ConfigError& ex) {
      reply(res, 400, {{"error", ex.what()}});
    } catch (const std::exception& ex) {
      reply(res, 500, {{"error", ex.what()}});
    }
  }

  AppConfig cfg_;
  std::shared_ptr<const LlmBackend> llm_;
  mutable std::mutex mu_;
  std::shared_ptr<const Engine> engine_;
  httplib::Server server_;
  std::thread thread_;
  std::thread loader_;
  int port_ = -1;
};

}  // namespace archrag::app
