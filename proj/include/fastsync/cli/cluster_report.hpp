#pragma once

// Cluster stability over a trace: at every clustering point the window of
// recent runtimes is clustered into k groups (k = 2, 3, 4) by searching eps,
// then ARI across points and inter/intra distances are tabulated.

#include <algorithm>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fastsync/clustering.hpp"
#include "fastsync/sim/workers.hpp"

namespace fastsync::cli {

struct ClusterReportRow {
  int clusters = 0;
  int points = 0;   // clustering points examined
  int reached = 0;  // points where exactly `clusters` groups were found
  double ari_all_to_all = 0.0;
  double ari_consecutive = 0.0;
  double intra = 0.0;
  double inter = 0.0;
  double eps_mean = 0.0;
};

inline clustering::TraceWindow window_at(const sim::TraceSet& t, std::size_t end, std::size_t length) {
  clustering::TraceWindow w;
  for (std::size_t i = 0; i < t.workers(); ++i) {
    w.worker_ids.push_back(t.worker_ids[i]);
    w.points.emplace_back(t.runtimes[i].begin() + static_cast<std::ptrdiff_t>(end - length),
                          t.runtimes[i].begin() + static_cast<std::ptrdiff_t>(end));
  }
  return w;
}

// Smallest candidate eps giving exactly k clusters. Candidates are the
// pairwise distances, thinned to at most 256 evenly spaced ranks.
inline std::optional<std::pair<double, clustering::Clustering>> search_eps(const clustering::TraceWindow& w, int k,
                                                                           int min_pts) {
  std::vector<double> cand;
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = i + 1; j < w.size(); ++j) cand.push_back(clustering::euclidean(w.points[i], w.points[j]));
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  if (cand.size() > 256) {
    std::vector<double> thin;
    for (std::size_t i = 0; i < 256; ++i) thin.push_back(cand[i * (cand.size() - 1) / 255]);
    cand = std::move(thin);
  }
  for (double eps : cand) {
    if (!(eps > 0.0)) continue;
    auto c = clustering::dbscan(w.points, eps, min_pts);
    if (c.num_clusters == k) return std::make_pair(eps, std::move(c));
  }
  return std::nullopt;
}

inline std::vector<ClusterReportRow> cluster_report(const sim::TraceSet& t, int window, int step,
                                                    const std::vector<int>& ks = {2, 3, 4}) {
  if (window < 1 || step < 1) throw DomainError("cluster_report: window and step must be >= 1");
  if (t.workers() < 2) throw InsufficientDataError("cluster_report: need at least 2 workers");
  if (t.iterations() < static_cast<std::size_t>(window)) throw InsufficientDataError("cluster_report: trace shorter than the window");
  std::vector<clustering::TraceWindow> windows;
  for (std::size_t end = static_cast<std::size_t>(window); end <= t.iterations(); end += static_cast<std::size_t>(step))
    windows.push_back(window_at(t, end, static_cast<std::size_t>(window)));

  std::vector<ClusterReportRow> out;
  for (int k : ks) {
    ClusterReportRow row;
    row.clusters = k;
    row.points = static_cast<int>(windows.size());
    std::vector<clustering::Clustering> found;
    for (const auto& w : windows) {
      const int min_pts = clustering::default_dbscan_params(w).min_pts;
      auto r = search_eps(w, k, min_pts);
      if (!r) continue;
      const auto d = clustering::cluster_distances(w.points, r->second);
      row.intra += d.intra;
      row.inter += d.inter;
      row.eps_mean += r->first;
      found.push_back(std::move(r->second));
    }
    row.reached = static_cast<int>(found.size());
    if (!found.empty()) {
      row.intra /= row.reached;
      row.inter /= row.reached;
      row.eps_mean /= row.reached;
      row.ari_all_to_all = clustering::ari_all_to_all(found);
      row.ari_consecutive = clustering::ari_consecutive(found);
    }
    out.push_back(row);
  }
  return out;
}

inline void write_cluster_report(std::ostream& out, const std::vector<ClusterReportRow>& rows) {
  out << "clusters,points,reached,ari_all_to_all,ari_consecutive,intra,inter,eps_mean\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%d,%d,%d,%.6f,%.6f,%.6f,%.6f,%.6f\n", r.clusters, r.points, r.reached,
                  r.ari_all_to_all, r.ari_consecutive, r.intra, r.inter, r.eps_mean);
    out << buf;
  }
}

}  // namespace fastsync::cli
