#pragma once

// Density clustering of workers by execution progress, reduction to a
// fast/slow pair, and the cluster-quality statistics (ARI, distances).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "fastsync/error.hpp"
#include "fastsync/stats.hpp"

namespace fastsync::clustering {

using Point = std::vector<double>;

inline constexpr int kNoise = -1;

// A window of per-iteration runtimes, one row per worker.
struct TraceWindow {
  std::vector<int> worker_ids;
  std::vector<Point> points;

  std::size_t size() const { return points.size(); }
  std::size_t dim() const { return points.empty() ? 0 : points.front().size(); }

  void validate() const {
    if (worker_ids.size() != points.size()) throw ValidationError("trace window: one id per point required");
    if (points.empty()) throw DomainError("trace window is empty");
    const std::size_t d = points.front().size();
    if (d == 0) throw ValidationError("trace window: feature vectors must have dimension >= 1");
    for (const auto& p : points)
      if (p.size() != d) throw ValidationError("trace window: feature vectors differ in dimension");
    std::set<int> ids(worker_ids.begin(), worker_ids.end());
    if (ids.size() != worker_ids.size()) throw ValidationError("trace window: duplicate worker id");
  }
};

struct Clustering {
  std::vector<int> labels;
  int num_clusters = 0;

  static Clustering from_labels(std::vector<int> labels) {
    std::set<int> ids;
    for (int l : labels)
      if (l >= 0) ids.insert(l);
    return Clustering{std::move(labels), static_cast<int>(ids.size())};
  }
};

enum class Role { fast, slow };

inline const char* to_string(Role r) { return r == Role::fast ? "fast" : "slow"; }

struct ClusterModel {
  std::vector<int> members;
  stats::MixtureModel model;
  Role role = Role::fast;

  std::size_t size() const { return members.size(); }
};

struct TwoClusters {
  ClusterModel fast;
  ClusterModel slow;
  std::vector<int> outliers;
};

inline double euclidean(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Standard DBSCAN. Points are scanned in index order and each cluster is
// fully expanded before the next starts, so a border point reachable from
// several clusters lands in the one created first.
inline Clustering dbscan(std::span<const Point> points, double eps, int min_pts) {
  if (points.empty()) throw DomainError("dbscan: no points");
  if (!(eps > 0.0)) throw DomainError("dbscan: eps must be > 0");
  if (min_pts < 1) throw DomainError("dbscan: min_pts must be >= 1");

  const std::size_t n = points.size();
  auto neighbours = [&](std::size_t i) {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < n; ++j)
      if (euclidean(points[i], points[j]) <= eps) out.push_back(j);
    return out;
  };

  constexpr int kUnvisited = -2;
  std::vector<int> labels(n, kUnvisited);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    auto seeds = neighbours(i);
    if (static_cast<int>(seeds.size()) < min_pts) {
      labels[i] = kNoise;
      continue;
    }
    const int id = next++;
    labels[i] = id;
    std::deque<std::size_t> queue(seeds.begin(), seeds.end());
    while (!queue.empty()) {
      const std::size_t j = queue.front();
      queue.pop_front();
      if (labels[j] == kNoise) labels[j] = id;  // border point
      if (labels[j] != kUnvisited) continue;
      labels[j] = id;
      auto more = neighbours(j);
      if (static_cast<int>(more.size()) >= min_pts) queue.insert(queue.end(), more.begin(), more.end());
    }
  }
  return Clustering{std::move(labels), next};
}

struct DbscanParams {
  double eps = 1.0;
  int min_pts = 2;
};

// eps = 0.5 * pooled within-worker stddev * sqrt(dim); min_pts = max(2, ceil(0.05 N)).
inline DbscanParams default_dbscan_params(const TraceWindow& window) {
  window.validate();
  const std::size_t d = window.dim();
  double pooled = 0.0;
  for (const auto& p : window.points) {
    const double mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(d);
    for (double x : p) pooled += (x - mean) * (x - mean);
  }
  pooled /= static_cast<double>(window.size() * d);
  double sd = std::sqrt(pooled);
  if (sd <= 0.0) {
    // No within-worker spread: fall back to the spread across workers, then to 1ms.
    std::vector<double> all;
    for (const auto& p : window.points) all.insert(all.end(), p.begin(), p.end());
    sd = std::sqrt(stats::detail::moments(all).variance);
    if (sd <= 0.0) sd = 1.0;
  }
  DbscanParams out;
  out.eps = 0.5 * sd * std::sqrt(static_cast<double>(d));
  out.min_pts = std::max(2, static_cast<int>(std::ceil(0.05 * static_cast<double>(window.size()))));
  return out;
}

namespace detail {
inline double choose2(double n) { return n * (n - 1.0) / 2.0; }
}  // namespace detail

// ARI from the contingency table. Noise (-1) is treated as one more label.
inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DomainError("adjusted_rand_index: label vectors differ in length");
  const double n = static_cast<double>(a.size());
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i) {
    table[{a[i], b[i]}] += 1.0;
    rows[a[i]] += 1.0;
    cols[b[i]] += 1.0;
  }
  // Identical trivial partitions (one block each, or all singletons).
  if ((rows.size() == 1 && cols.size() == 1) ||
      (rows.size() == a.size() && cols.size() == a.size()))
    return 1.0;

  double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
  for (const auto& [key, v] : table) index += detail::choose2(v);
  for (const auto& [key, v] : rows) sum_rows += detail::choose2(v);
  for (const auto& [key, v] : cols) sum_cols += detail::choose2(v);
  const double expected = sum_rows * sum_cols / detail::choose2(n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

inline double adjusted_rand_index(const Clustering& a, const Clustering& b) {
  return adjusted_rand_index(a.labels, b.labels);
}

// Mean ARI over every pair of clusterings (all-to-all comparison).
inline double ari_all_to_all(std::span<const Clustering> clusterings) {
  double total = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < clusterings.size(); ++i)
    for (std::size_t j = i + 1; j < clusterings.size(); ++j) {
      total += adjusted_rand_index(clusterings[i], clusterings[j]);
      ++count;
    }
  return count == 0 ? 1.0 : total / count;
}

// Mean ARI between consecutive clusterings.
inline double ari_consecutive(std::span<const Clustering> clusterings) {
  double total = 0.0;
  int count = 0;
  for (std::size_t i = 1; i < clusterings.size(); ++i) {
    total += adjusted_rand_index(clusterings[i - 1], clusterings[i]);
    ++count;
  }
  return count == 0 ? 1.0 : total / count;
}

struct ClusterDistances {
  double intra = 0.0;  // mean over clusters of the max pairwise member distance
  double inter = 0.0;  // mean over cluster pairs of the centroid distance
  bool inter_defined = true;
};

inline ClusterDistances cluster_distances(std::span<const Point> points, const Clustering& clustering) {
  if (clustering.labels.size() != points.size()) throw DomainError("cluster_distances: labels/points length mismatch");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < points.size(); ++i)
    if (clustering.labels[i] >= 0) groups[clustering.labels[i]].push_back(i);
  if (groups.empty()) throw DomainError("cluster_distances: clustering has no non-noise cluster");

  ClusterDistances out;
  std::vector<Point> centroids;
  for (const auto& [id, members] : groups) {
    double diameter = 0.0;
    for (std::size_t x = 0; x < members.size(); ++x)
      for (std::size_t y = x + 1; y < members.size(); ++y)
        diameter = std::max(diameter, euclidean(points[members[x]], points[members[y]]));
    out.intra += diameter;

    Point c(points[members.front()].size(), 0.0);
    for (std::size_t m : members)
      for (std::size_t k = 0; k < c.size(); ++k) c[k] += points[m][k];
    for (double& v : c) v /= static_cast<double>(members.size());
    centroids.push_back(std::move(c));
  }
  out.intra /= static_cast<double>(groups.size());

  if (centroids.size() < 2) {
    out.inter = 0.0;
    out.inter_defined = false;
    return out;
  }
  int pairs = 0;
  for (std::size_t i = 0; i < centroids.size(); ++i)
    for (std::size_t j = i + 1; j < centroids.size(); ++j) {
      out.inter += euclidean(centroids[i], centroids[j]);
      ++pairs;
    }
  out.inter /= pairs;
  return out;
}

namespace detail {

inline double mean_of(const TraceWindow& w, std::span<const std::size_t> rows) {
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t r : rows)
    for (double x : w.points[r]) {
      s += x;
      ++count;
    }
  return s / static_cast<double>(count);
}

inline ClusterModel make_model(const TraceWindow& w, std::span<const std::size_t> rows, Role role) {
  ClusterModel m;
  m.role = role;
  std::vector<double> samples;
  for (std::size_t r : rows) {
    m.members.push_back(w.worker_ids[r]);
    samples.insert(samples.end(), w.points[r].begin(), w.points[r].end());
  }
  // A single one-iteration member cannot be fitted: replicate its values.
  for (std::size_t i = 0; samples.size() < 4; ++i) samples.push_back(samples[i]);
  m.model = stats::fit_mixture(samples);
  return m;
}

}  // namespace detail

// Two largest DBSCAN clusters become the game's fast/slow pair; every other
// worker is an outlier. Density is measured on window.points; the mixtures
// are fitted on `samples` (same rows) when given, else on the points.
inline TwoClusters form_two_clusters(const TraceWindow& window, double eps, int min_pts,
                                     const TraceWindow* samples = nullptr) {
  window.validate();
  const TraceWindow& fit_on = samples ? *samples : window;
  if (fit_on.size() != window.size()) throw DomainError("form_two_clusters: sample rows do not match the window");
  if (window.size() < 2) throw DomainError("form_two_clusters: need at least 2 workers");
  const Clustering c = dbscan(window.points, eps, min_pts);
  if (c.num_clusters < 2)
    throw ClusteringDegenerateError("form_two_clusters: DBSCAN produced " + std::to_string(c.num_clusters) +
                                    " cluster(s)");

  struct Group {
    int id;
    std::vector<std::size_t> rows;
    double mean;
  };
  std::vector<Group> groups(static_cast<std::size_t>(c.num_clusters));
  for (int id = 0; id < c.num_clusters; ++id) groups[static_cast<std::size_t>(id)].id = id;
  for (std::size_t i = 0; i < c.labels.size(); ++i)
    if (c.labels[i] >= 0) groups[static_cast<std::size_t>(c.labels[i])].rows.push_back(i);
  for (auto& g : groups) g.mean = detail::mean_of(window, g.rows);

  std::stable_sort(groups.begin(), groups.end(), [](const Group& a, const Group& b) {
    if (a.rows.size() != b.rows.size()) return a.rows.size() > b.rows.size();
    return a.mean < b.mean;
  });
  Group first = groups[0], second = groups[1];
  const bool first_fast = first.mean < second.mean || (first.mean == second.mean && first.id < second.id);
  const Group& fast = first_fast ? first : second;
  const Group& slow = first_fast ? second : first;

  TwoClusters out;
  out.fast = detail::make_model(fit_on, fast.rows, Role::fast);
  out.slow = detail::make_model(fit_on, slow.rows, Role::slow);
  std::set<std::size_t> kept(fast.rows.begin(), fast.rows.end());
  kept.insert(slow.rows.begin(), slow.rows.end());
  for (std::size_t i = 0; i < window.size(); ++i)
    if (!kept.count(i)) out.outliers.push_back(window.worker_ids[i]);
  return out;
}

// Fallback split used by the controller when density clustering cannot
// separate the workers: lower half of mean runtimes is fast.
inline TwoClusters median_split(const TraceWindow& window, const TraceWindow* samples = nullptr) {
  window.validate();
  const TraceWindow& fit_on = samples ? *samples : window;
  if (fit_on.size() != window.size()) throw DomainError("median_split: sample rows do not match the window");
  if (window.size() < 2) throw DomainError("median_split: need at least 2 workers");
  std::vector<std::size_t> order(window.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> means(window.size());
  for (std::size_t i = 0; i < window.size(); ++i) {
    const std::size_t row[] = {i};
    means[i] = detail::mean_of(window, row);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return means[a] < means[b]; });
  const std::size_t half = window.size() / 2;
  std::vector<std::size_t> lo(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(half));
  std::vector<std::size_t> hi(order.begin() + static_cast<std::ptrdiff_t>(half), order.end());
  std::sort(lo.begin(), lo.end());
  std::sort(hi.begin(), hi.end());
  TwoClusters out;
  out.fast = detail::make_model(fit_on, lo, Role::fast);
  out.slow = detail::make_model(fit_on, hi, Role::slow);
  return out;
}

}  // namespace fastsync::clustering
