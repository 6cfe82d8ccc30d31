#pragma once

#include <cmath>
#include <cstdint>
#include <future>
#include <string>
#include <vector>

#include "archrag/backends.hpp"
#include "archrag/text/unicode.hpp"

namespace archrag {

/// Unit-normalized vector tagged with the provider that produced it.
struct Embedding {
  std::vector<float> values;
  std::string provider_id;

  std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const Embedding&) const = default;
};

enum class ProviderKind { remote, fallback };

/// Whether a text is embedded as a passage or as a query; selects the
/// optional per-provider prefix.
enum class TextRole { document, query };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::fallback;
  std::string base_url;
  std::string api_key;
  std::string model_name = "fallback-hash";
  std::size_t dim = 256;
  std::size_t batch_size = 32;
  std::size_t max_concurrent_requests = 4;
  RetryPolicy retry;
  std::uint64_t seed = 0;
  std::string query_prefix;
  std::string doc_prefix;

  void validate() const {
    if (dim < 8) throw ConfigError("embedding dim must be >= 8");
    if (batch_size < 1) throw ConfigError("embedding batch_size must be >= 1");
    if (max_concurrent_requests < 1)
      throw ConfigError("embedding max_concurrent_requests must be >= 1");
    if (kind == ProviderKind::remote && base_url.empty())
      throw ConfigError("remote embedding provider has no base URL (set EMBED_API_BASE)");
  }

  std::string provider_id() const {
    if (kind == ProviderKind::fallback)
      return "fallback-hash/d" + std::to_string(dim) + "/s" + std::to_string(seed);
    return "remote/" + model_name;
  }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace detail

/// Seeded 64-bit feature hash.
inline std::uint64_t feature_hash(std::string_view feature, std::uint64_t seed) {
  return detail::splitmix64(detail::fnv1a64(feature) ^ detail::splitmix64(seed));
}

/// Unigram and bigram features of the lowercased word tokens.
inline std::vector<std::string> hashed_features(std::string_view text) {
  const auto words = text::word_tokens(text);
  std::vector<std::string> feats;
  feats.reserve(words.size() * 2);
  for (const auto& w : words) feats.push_back("u:" + w);
  for (std::size_t i = 0; i + 1 < words.size(); ++i)
    feats.push_back("b:" + words[i] + " " + words[i + 1]);
  return feats;
}

/// The fallback embedding at full double precision. Empty accumulations map
/// to e0.
inline std::vector<double> fallback_vector(std::string_view text, std::size_t dim,
                                           std::uint64_t seed = 0) {
  if (dim < 8) throw ConfigError("embedding dim must be >= 8");
  std::vector<double> acc(dim, 0.0);
  for (const auto& f : hashed_features(text)) {
    const std::uint64_t h = feature_hash(f, seed);
    const std::size_t bucket = h % dim;
    const double sign = (detail::splitmix64(h) & 1u) ? -1.0 : 1.0;
    acc[bucket] += sign;
  }
  double norm2 = 0.0;
  for (double v : acc) norm2 += v * v;
  if (norm2 == 0.0) {
    acc.assign(dim, 0.0);
    acc[0] = 1.0;
    return acc;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : acc) v *= inv;
  return acc;
}

/// L2-normalizes in double precision and stores as float.
inline std::vector<float> normalize(const std::vector<double>& v) {
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  std::vector<float> out(v.size(), 0.0f);
  if (norm2 == 0.0) {
    if (!out.empty()) out[0] = 1.0f;
    return out;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] * inv);
  return out;
}

inline Embedding fallback_embed(std::string_view text, std::size_t dim, std::uint64_t seed = 0) {
  ProviderConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  return {normalize(fallback_vector(text, dim, seed)), cfg.provider_id()};
}

inline double dot(const std::vector<float>& a, const std::vector<float>& b) {
  if (a.size() != b.size()) throw DimensionMismatch(a.size(), b.size());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return s;
}

inline double l2_norm(const std::vector<float>& a) { return std::sqrt(dot(a, a)); }

inline double cosine(const std::vector<float>& a, const std::vector<float>& b) {
  const double na = l2_norm(a), nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

namespace detail {

inline std::vector<Embedding> embed_remote_batch(const std::vector<std::string>& texts,
                                                 const ProviderConfig& cfg) {
  const json reply = post_json("embedding", cfg.base_url, "/v1/embed",
                               {{"model", cfg.model_name}, {"texts", texts}}, cfg.retry,
                               cfg.api_key);
  std::size_t dim = 0;
  std::vector<std::vector<double>> vectors;
  try {
    dim = reply.at("dim").get<std::size_t>();
    vectors = reply.at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw BackendError("embedding", std::string("unexpected response shape: ") + e.what(), 200,
                       false);
  }
  if (dim != cfg.dim) throw DimensionMismatch(cfg.dim, dim);
  if (vectors.size() != texts.size())
    throw BackendError("embedding", "vector count does not match input count", 200, false);
  std::vector<Embedding> out;
  out.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.size() != cfg.dim) throw DimensionMismatch(cfg.dim, v.size());
    out.push_back({normalize(v), cfg.provider_id()});
  }
  return out;
}

}  // namespace detail

/// Embeds texts in order. Remote batches are issued with at most
/// max_concurrent_requests in flight and reassembled in input order.
inline std::vector<Embedding> embed_batch(const std::vector<std::string>& texts,
                                          const ProviderConfig& cfg,
                                          TextRole role = TextRole::document) {
  cfg.validate();
  if (texts.empty()) throw Error("embed_batch: no texts given");
  std::vector<std::string> prepared;
  prepared.reserve(texts.size());
  const std::string& prefix = role == TextRole::query ? cfg.query_prefix : cfg.doc_prefix;
  for (const auto& t : texts) {
    if (text::trim(t).empty()) throw Error("embed_batch: empty text");
    prepared.push_back(prefix + t);
  }

  std::vector<Embedding> out;
  out.reserve(prepared.size());
  if (cfg.kind == ProviderKind::fallback) {
    for (const auto& t : prepared) {
      Embedding e = fallback_embed(t, cfg.dim, cfg.seed);
      e.provider_id = cfg.provider_id();
      out.push_back(std::move(e));
    }
    return out;
  }

  std::vector<std::vector<std::string>> batches;
  for (std::size_t i = 0; i < prepared.size(); i += cfg.batch_size)
    batches.emplace_back(prepared.begin() + static_cast<std::ptrdiff_t>(i),
                         prepared.begin() + static_cast<std::ptrdiff_t>(
                                                std::min(prepared.size(), i + cfg.batch_size)));
  for (std::size_t wave = 0; wave < batches.size(); wave += cfg.max_concurrent_requests) {
    const std::size_t wave_end = std::min(batches.size(), wave + cfg.max_concurrent_requests);
    std::vector<std::future<std::vector<Embedding>>> inflight;
    for (std::size_t b = wave; b < wave_end; ++b)
      inflight.push_back(std::async(std::launch::async, detail::embed_remote_batch,
                                    std::cref(batches[b]), std::cref(cfg)));
    for (auto& f : inflight) {
      auto part = f.get();
      std::move(part.begin(), part.end(), std::back_inserter(out));
    }
  }
  return out;
}

inline Embedding embed_query(const std::string& text, const ProviderConfig& cfg) {
  return embed_batch({text}, cfg, TextRole::query).front();
}

}  // namespace archrag
