#pragma once

// Seeded k-means and the silhouette / Davies-Bouldin / Calinski-Harabasz
// indices, all with Euclidean distance.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "archrag/embedding.hpp"

namespace archrag::eval {

using Point = std::vector<double>;

/// Unit-normalized copies in double precision.
inline std::vector<Point> to_points(const std::vector<Embedding>& embs) {
  std::vector<Point> pts;
  pts.reserve(embs.size());
  for (const auto& e : embs) {
    Point p(e.values.begin(), e.values.end());
    double n2 = 0.0;
    for (double v : p) n2 += v * v;
    if (n2 > 0.0)
      for (auto& v : p) v /= std::sqrt(n2);
    pts.push_back(std::move(p));
  }
  return pts;
}

inline double squared_distance(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline double distance(const Point& a, const Point& b) { return std::sqrt(squared_distance(a, b)); }

struct KMeansOptions {
  std::size_t max_iterations = 100;
  double tolerance = 1e-6;
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<Point> centroids_of(const std::vector<Point>& pts,
                                       const std::vector<int>& labels, std::size_t k) {
  const std::size_t dim = pts.front().size();
  std::vector<Point> c(k, Point(dim, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto l = static_cast<std::size_t>(labels[i]);
    ++counts[l];
    for (std::size_t d = 0; d < dim; ++d) c[l][d] += pts[i][d];
  }
  for (std::size_t l = 0; l < k; ++l)
    if (counts[l] > 0)
      for (auto& v : c[l]) v /= static_cast<double>(counts[l]);
  return c;
}

}  // namespace detail

/// k-means with k-means++ seeding from `seed`. Throws when the points do not
/// support more than one cluster (all identical).
inline std::vector<int> assign_clusters(const std::vector<Point>& pts, std::size_t k,
                                        std::uint64_t seed, const KMeansOptions& opts = {}) {
  if (k < 2) throw ConfigError("k-means needs k >= 2");
  if (pts.size() <= k) throw ConfigError("k-means needs more points than clusters");
  bool all_same = true;
  for (const auto& p : pts)
    if (p != pts.front()) all_same = false;
  if (all_same) throw UndefinedMetric("all points identical: only one effective cluster");

  std::mt19937_64 rng(seed);
  std::vector<Point> centers{pts[rng() % pts.size()]};
  std::vector<double> d2(pts.size());
  while (centers.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, squared_distance(pts[i], c));
      d2[i] = best;
      total += best;
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = detail::unit_uniform(rng) * total;
      for (pick = 0; pick + 1 < pts.size(); ++pick) {
        if (target < d2[pick]) break;
        target -= d2[pick];
      }
      while (d2[pick] == 0.0 && pick > 0) --pick;
    }
    centers.push_back(pts[pick]);
  }

  std::vector<int> labels(pts.size(), 0);
  for (std::size_t it = 0; it < opts.max_iterations; ++it) {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = squared_distance(pts[i], centers[c]);
        if (d < best) {
          best = d;
          labels[i] = static_cast<int>(c);
        }
      }
    }
    auto next = detail::centroids_of(pts, labels, k);
    // An emptied cluster keeps its previous center.
    std::vector<std::size_t> counts(k, 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    double moved = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) next[c] = centers[c];
      moved = std::max(moved, distance(next[c], centers[c]));
    }
    centers = std::move(next);
    if (moved <= opts.tolerance) break;
  }
  return labels;
}

inline std::vector<int> assign_clusters(const std::vector<Embedding>& embs, std::size_t k,
                                        std::uint64_t seed, const KMeansOptions& opts = {}) {
  return assign_clusters(to_points(embs), k, seed, opts);
}

struct ClusterMetrics {
  double silhouette = 0.0;
  double davies_bouldin = 0.0;
  double calinski_harabasz = 0.0;
};

/// Labels must be 0..k-1 with every cluster non-empty. Singleton clusters
/// score silhouette 0; coincident centroids contribute 0 to Davies-Bouldin;
/// zero within-cluster dispersion gives Calinski-Harabasz 1.
inline ClusterMetrics cluster_metrics(const std::vector<Point>& pts, const std::vector<int>& labels) {
  const std::size_t n = pts.size();
  if (n < 3) throw UndefinedMetric("cluster metrics need at least 3 points");
  if (labels.size() != n) throw Error("label count does not match point count");
  int max_label = -1;
  for (int l : labels) {
    if (l < 0) throw Error("negative cluster label");
    max_label = std::max(max_label, l);
  }
  const auto k = static_cast<std::size_t>(max_label + 1);
  std::vector<std::size_t> counts(k, 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (std::size_t c = 0; c < k; ++c)
    if (counts[c] == 0) throw UndefinedMetric("cluster " + std::to_string(c) + " is empty");
  if (k < 2) throw UndefinedMetric("cluster metrics need at least two clusters");

  ClusterMetrics m;

  // Silhouette: per point, mean distance to each cluster.
  double sil_sum = 0.0;
  std::vector<double> per_cluster(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(per_cluster.begin(), per_cluster.end(), 0.0);
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) per_cluster[static_cast<std::size_t>(labels[j])] += distance(pts[i], pts[j]);
    const auto own = static_cast<std::size_t>(labels[i]);
    if (counts[own] == 1) continue;
    const double a = per_cluster[own] / static_cast<double>(counts[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c)
      if (c != own) b = std::min(b, per_cluster[c] / static_cast<double>(counts[c]));
    const double denom = std::max(a, b);
    sil_sum += denom > 0.0 ? (b - a) / denom : 0.0;
  }
  m.silhouette = sil_sum / static_cast<double>(n);

  const auto centers = detail::centroids_of(pts, labels, k);
  std::vector<double> sigma(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    sigma[c] += distance(pts[i], centers[c]);
  }
  for (std::size_t c = 0; c < k; ++c) sigma[c] /= static_cast<double>(counts[c]);

  double db = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (j == i) continue;
      const double d = distance(centers[i], centers[j]);
      if (d > 0.0) worst = std::max(worst, (sigma[i] + sigma[j]) / d);
    }
    db += worst;
  }
  m.davies_bouldin = db / static_cast<double>(k);

  Point overall(pts.front().size(), 0.0);
  for (const auto& p : pts)
    for (std::size_t d = 0; d < p.size(); ++d) overall[d] += p[d];
  for (auto& v : overall) v /= static_cast<double>(n);
  double between = 0.0, within = 0.0;
  for (std::size_t c = 0; c < k; ++c)
    between += static_cast<double>(counts[c]) * squared_distance(centers[c], overall);
  for (std::size_t i = 0; i < n; ++i)
    within += squared_distance(pts[i], centers[static_cast<std::size_t>(labels[i])]);
  if (n == k || within == 0.0) {
    m.calinski_harabasz = 1.0;
  } else {
    m.calinski_harabasz = (between / static_cast<double>(k - 1)) /
                          (within / static_cast<double>(n - k));
  }
  return m;
}

inline ClusterMetrics cluster_metrics(const std::vector<Embedding>& embs,
                                      const std::vector<int>& labels) {
  return cluster_metrics(to_points(embs), labels);
}

}  // namespace archrag::eval
