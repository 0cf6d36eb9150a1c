#pragma once

// The controller loop: windows of observed runtimes, periodic re-clustering,
// schedule construction and one protocol iteration per round.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "fastsync/clustering.hpp"
#include "fastsync/scheduler.hpp"
#include "fastsync/sim/baselines.hpp"
#include "fastsync/sim/config.hpp"
#include "fastsync/sim/fastsync_iteration.hpp"
#include "fastsync/sim/metrics.hpp"
#include "fastsync/sim/workers.hpp"

namespace fastsync::sim {

enum class ClusterMethod { dbscan, dbscan_widened, median_split };

struct ControllerPlan {
  clustering::TwoClusters clusters;
  ClusterMethod method = ClusterMethod::dbscan;
  std::optional<sched::SyncSchedule> schedule;  // empty when the quorum is infeasible
  std::vector<ClusterTag> tags;
};

// DBSCAN with default parameters; eps doubles up to three times while the
// result is degenerate or too small for the quorum, then a median split.
inline std::pair<clustering::TwoClusters, ClusterMethod> cluster_workers(const clustering::TraceWindow& window,
                                                                      double alpha, int n,
                                                                      const clustering::TraceWindow* samples = nullptr) {
  const auto params = clustering::default_dbscan_params(window);
  const std::size_t need = static_cast<std::size_t>(quorum_count(alpha, n));
  double eps = params.eps;
  for (int attempt = 0; attempt <= 3; ++attempt, eps *= 2.0) {
    try {
      auto c = clustering::form_two_clusters(window, eps, params.min_pts, samples);
      if (c.fast.size() + c.slow.size() >= need)
        return {std::move(c), attempt == 0 ? ClusterMethod::dbscan : ClusterMethod::dbscan_widened};
    } catch (const ClusteringDegenerateError&) {
    }
  }
  return {clustering::median_split(window, samples), ClusterMethod::median_split};
}

inline void attach_local_model(clustering::ClusterModel& m, const std::vector<std::vector<double>>& local_history) {
  std::vector<double> samples;
  for (int w : m.members) {
    const auto& h = local_history[static_cast<std::size_t>(w)];
    samples.insert(samples.end(), h.begin(), h.end());
  }
  for (std::size_t i = 0; !samples.empty() && samples.size() < 4; ++i) samples.push_back(samples[i]);
  if (samples.empty()) return;
  const auto fit = stats::fit_mixture(samples);
  m.model.local_early = fit.early;
  m.model.local_late = fit.late;
  m.model.local_weight_early = fit.weight_early;
  m.model = stats::with_dominant_late(m.model);
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline ControllerPlan plan_iteration(const SimulationConfig& cfg, const std::vector<std::vector<double>>& history,
                                     const std::vector<std::vector<double>>& local_history) {
  // Workers are clustered on their window median; the mixtures see every sample.
  clustering::TraceWindow features, samples;
  for (int w = 0; w < cfg.n_workers; ++w) {
    const auto& h = history[static_cast<std::size_t>(w)];
    features.worker_ids.push_back(w);
    features.points.push_back({median(h)});
    samples.worker_ids.push_back(w);
    samples.points.push_back(h);
  }
  ControllerPlan plan;
  auto [clusters, method] = cluster_workers(features, cfg.alpha, cfg.n_workers, &samples);
  plan.clusters = std::move(clusters);
  plan.method = method;
  attach_local_model(plan.clusters.fast, local_history);
  attach_local_model(plan.clusters.slow, local_history);
  plan.tags.assign(static_cast<std::size_t>(cfg.n_workers), ClusterTag::outlier);
  for (int w : plan.clusters.fast.members) plan.tags[static_cast<std::size_t>(w)] = ClusterTag::fast;
  for (int w : plan.clusters.slow.members) plan.tags[static_cast<std::size_t>(w)] = ClusterTag::slow;
  try {
    plan.schedule = sched::build_schedule(plan.clusters.fast, plan.clusters.slow, cfg.alpha, cfg.n_workers,
                                          cfg.payoff_params(), cfg.mode);
  } catch (const InfeasibilityError&) {
    plan.schedule.reset();
  }
  return plan;
}

struct FastSyncRun {
  std::vector<IterationMetrics> iterations;
  std::vector<ClusterMethod> methods;  // one per re-clustering
};

inline FastSyncRun run_fastsync(const SimulationConfig& cfg, const std::vector<WorkerProfile>& profiles,
                                const WorkloadDraws& work, std::vector<std::vector<double>> history,
                                std::vector<std::vector<double>> local_history, int run) {
  const int n = cfg.n_workers;
  NetworkModel net = cfg.network();
  Rng net_rng = make_rng(cfg.seed, run, Stream::network);
  Rng proto_rng = make_rng(cfg.seed, run, Stream::protocol);
  Rng iso_rng = make_rng(cfg.seed, run, Stream::isolation);
  (void)profiles;

  FastSyncRun out;
  std::optional<ControllerPlan> plan;
  for (int it = 0; it < cfg.rounds; ++it) {
    const bool recluster = it == 0 || (cfg.clustering_frequency > 0 && it % cfg.clustering_frequency == 0);
    IterationMetrics m;
    double offset = 0.0, bcast = 0.0;
    if (recluster) {
      plan = plan_iteration(cfg, history, local_history);
      out.methods.push_back(plan->method);
      for (int w = 0; w < n; ++w) bcast = std::max(bcast, *deliver(net, Edge::worker_controller, 0.0, net_rng));
      offset = cfg.clustering_cost + bcast;
      m.clustering_ms = cfg.clustering_cost;
      m.decision_messages = 1;
    }
    for (int w = 0; w < n; ++w)
      net.isolated[static_cast<std::size_t>(w)] =
          std::uniform_real_distribution<double>(0.0, 1.0)(iso_rng) < cfg.isolation_probability;

    IterationSetup setup;
    setup.tags = plan->tags;
    setup.sync_task_ms = cfg.sync_task_ms;
    setup.alpha = cfg.alpha;
    setup.late_threshold = cfg.late_threshold;
    setup.net = net;
    for (int w = 0; w < n; ++w) {
      setup.pre_sync.push_back(work.pre_sync[static_cast<std::size_t>(w)][static_cast<std::size_t>(it)]);
      setup.locals.push_back(work.locals[static_cast<std::size_t>(w)][static_cast<std::size_t>(it)]);
    }

    double end = 0.0, wait = 0.0, comp = 0.0, report = 0.0;
    int reports = 0;
    if (plan->schedule) {
      setup.schedule = &*plan->schedule;
      const IterationRecord rec = simulate_fastsync_iteration(setup, net_rng, proto_rng);
      m.success_option = rec.success_option;
      m.synced_workers = rec.synced;
      m.participation = static_cast<double>(rec.synced) / n;
      m.decision_messages += static_cast<int>(rec.sent.size());
      for (const auto& o : rec.workers) {
        const double lat = *deliver(net, Edge::worker_controller, 0.0, net_rng);
        end = std::max(end, o.finish + lat);
        wait += o.wait_ms;
        comp += o.computation_ms;
        report += lat;
        reports += 4 + (o.phase.kind == protocol::PhaseKind::synced ? 1 : 0);
      }
    } else {
      m.infeasible = true;
      for (int w = 0; w < n; ++w) {
        const auto& lt = setup.locals[static_cast<std::size_t>(w)];
        const double c = setup.pre_sync[static_cast<std::size_t>(w)] + lt[0] + lt[1];
        const double lat = *deliver(net, Edge::worker_controller, 0.0, net_rng);
        end = std::max(end, c + lat);
        comp += c;
        report += lat;
        reports += 4;
      }
    }
    m.runtime_per_sync_point = offset + end;
    m.computation_ms = comp / n;
    m.communication_ms = bcast + wait / n;
    m.communication_inclusive_ms = m.communication_ms + report / n;
    m.progress_messages = reports;
    out.iterations.push_back(m);

    for (int w = 0; w < n; ++w) {
      auto& h = history[static_cast<std::size_t>(w)];
      h.erase(h.begin());
      h.push_back(setup.pre_sync[static_cast<std::size_t>(w)]);
      auto& lh = local_history[static_cast<std::size_t>(w)];
      lh.erase(lh.begin(), lh.begin() + 2);
      lh.push_back(setup.locals[static_cast<std::size_t>(w)][0]);
      lh.push_back(setup.locals[static_cast<std::size_t>(w)][1]);
    }
  }
  return out;
}

}  // namespace fastsync::sim
