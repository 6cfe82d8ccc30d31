#pragma once

// JSON-over-HTTP client plumbing shared by every remote backend.

#include <httplib.h>

#include <chrono>
#include <nlohmann/json.hpp>
#include <string>
#include <thread>
#include <utility>

#include "archrag/error.hpp"

namespace archrag {

using json = nlohmann::json;

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{50};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds timeout{30000};
};

/// Base URL split into "scheme://host:port" and an optional path prefix.
struct Endpoint {
  std::string origin;
  std::string prefix;

  static Endpoint parse(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos || base_url.empty())
      throw ConfigError("invalid base URL '" + base_url + "'");
    const auto path_start = base_url.find('/', scheme_end + 3);
    Endpoint e;
    if (path_start == std::string::npos) {
      e.origin = base_url;
    } else {
      e.origin = base_url.substr(0, path_start);
      e.prefix = base_url.substr(path_start);
      while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
    }
    return e;
  }
};

/// POSTs `body` to base_url + path and returns the parsed JSON reply.
/// Transport errors, timeouts and 5xx are retried with exponential backoff;
/// 4xx fail immediately.
inline json post_json(const std::string& component, const std::string& base_url,
                      const std::string& path, const json& body,
                      const RetryPolicy& policy, const std::string& bearer = {}) {
  const Endpoint ep = Endpoint::parse(base_url);
  const std::string payload = body.dump();
  auto backoff = policy.initial_backoff;
  std::string last_error = "no attempt made";
  int last_status = 0;
  const int attempts = std::max(1, policy.max_attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    httplib::Client client(ep.origin);
    const auto secs = policy.timeout.count() / 1000;
    const auto usecs = (policy.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!bearer.empty()) headers.emplace("Authorization", "Bearer " + bearer);
    auto res = client.Post(ep.prefix + path, headers, payload, "application/json");
    if (!res) {
      last_error = "request to " + base_url + path + " failed: " +
                   httplib::to_string(res.error());
      last_status = 0;
    } else if (res->status >= 400 && res->status < 500 && res->status != 429) {
      throw BackendError(component,
                         "HTTP " + std::to_string(res->status) + " from " +
                             base_url + path + ": " + res->body,
                         res->status, false);
    } else if (res->status >= 500 || res->status == 429) {
      last_error = "HTTP " + std::to_string(res->status) + " from " + base_url + path;
      last_status = res->status;
    } else {
      try {
        return json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw BackendError(component, std::string("malformed response: ") + e.what(),
                           res->status, false);
      }
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<long long>(static_cast<double>(backoff.count()) *
                                 policy.backoff_multiplier));
    }
  }
  throw BackendError(component,
                     last_error + " (after " + std::to_string(attempts) + " attempts)",
                     last_status, true);
}

}  // namespace archrag
