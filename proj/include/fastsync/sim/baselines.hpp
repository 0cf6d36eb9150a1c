#pragma once

// Parameter-server baselines (ASP, BSP, SSP, DSSP) as one continuous event
// simulation per run. Each iteration: compute, push to the server, pass the
// gate, receive the reply, apply the update (sync task), run local tasks.

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <vector>

#include "fastsync/error.hpp"
#include "fastsync/sim/config.hpp"
#include "fastsync/sim/engine.hpp"
#include "fastsync/sim/metrics.hpp"
#include "fastsync/sim/network.hpp"
#include "fastsync/sim/workers.hpp"

namespace fastsync::sim {

enum class Gate { proceed, block };

// Clocks count completed pushes.
inline Gate ssp_gate(int worker_clock, int min_clock, int s) {
  if (worker_clock < 0 || min_clock < 0) throw DomainError("ssp_gate: clocks must be >= 0");
  return worker_clock - min_clock <= s ? Gate::proceed : Gate::block;
}

inline int dssp_threshold(int s, int r_max, int estimate) {
  if (s > r_max) throw ConfigError("synchronizer", 0, "dssp needs s <= r_max");
  return std::min(r_max, s + std::max(0, estimate));
}

inline Gate dssp_gate(int worker_clock, int min_clock, int s, int r_max, int estimate) {
  if (worker_clock < 0 || min_clock < 0) throw DomainError("dssp_gate: clocks must be >= 0");
  return worker_clock - min_clock <= dssp_threshold(s, r_max, estimate) ? Gate::proceed : Gate::block;
}

// Predicted number of min-clock advances before the requesting worker comes
// back to the gate: the laggards' next pushes are extrapolated from their
// recent mean iteration time.
inline int dssp_estimate(double now, double requester_mean_iter, double next_min_advance, double slowest_mean_iter) {
  const double horizon = now + requester_mean_iter;
  if (next_min_advance > horizon) return 0;
  if (slowest_mean_iter <= 0.0) return 1;
  return 1 + static_cast<int>(std::floor((horizon - next_min_advance) / slowest_mean_iter));
}

struct GateRecord {
  double time = 0.0;
  int worker = 0;
  int worker_clock = 0;
  int min_clock = 0;
  int max_clock = 0;
  int threshold = 0;
};

struct BaselineRun {
  std::vector<IterationMetrics> iterations;
  std::vector<GateRecord> releases;  // filled when recording
};

struct WorkloadDraws {
  std::vector<std::vector<double>> pre_sync;               // [worker][iteration]
  std::vector<std::vector<std::array<double, 2>>> locals;  // [worker][iteration]
};

// The packed workload of one run. History draws come first so every
// synchronizer consumes the streams identically.
inline WorkloadDraws draw_workload(const SimulationConfig& cfg, const std::vector<WorkerProfile>& profiles, int run,
                                   std::vector<std::vector<double>>* history = nullptr,
                                   std::vector<std::vector<double>>* local_history = nullptr) {
  const int n = cfg.n_workers, w_hist = cfg.clustering_window;
  WorkloadDraws out;
  out.pre_sync.resize(static_cast<std::size_t>(n));
  out.locals.resize(static_cast<std::size_t>(n));
  if (history) history->assign(static_cast<std::size_t>(n), {});
  if (local_history) local_history->assign(static_cast<std::size_t>(n), {});
  for (int w = 0; w < n; ++w) {
    Rng exec = make_rng(cfg.seed, run, Stream::exec, w);
    Rng local = make_rng(cfg.seed, run, Stream::local, w);
    const auto& p = profiles[static_cast<std::size_t>(w)];
    for (int k = 0; k < w_hist + cfg.rounds; ++k) {
      const double d = draw_exec(p, k, cfg, exec);
      const double l1 = draw_local(cfg, local), l2 = draw_local(cfg, local);
      if (k < w_hist) {
        if (history) (*history)[static_cast<std::size_t>(w)].push_back(d);
        if (local_history) {
          (*local_history)[static_cast<std::size_t>(w)].push_back(l1);
          (*local_history)[static_cast<std::size_t>(w)].push_back(l2);
        }
      } else {
        out.pre_sync[static_cast<std::size_t>(w)].push_back(d);
        out.locals[static_cast<std::size_t>(w)].push_back({l1, l2});
      }
    }
  }
  return out;
}

inline BaselineRun run_baseline(const SimulationConfig& cfg, const SynchronizerSpec& spec,
                                const std::vector<WorkerProfile>& profiles, const WorkloadDraws& work, int run,
                                bool record = false) {
  if (spec.kind == SyncKind::fastsync) throw DomainError("run_baseline: FastSync is not a baseline");
  const int n = cfg.n_workers, rounds = cfg.rounds;
  (void)profiles;
  const NetworkModel net = cfg.network();
  Rng net_rng = make_rng(cfg.seed, run, Stream::network);

  struct PerIter {
    double push_lat = 0, arrival = 0, release = 0, reply_lat = 0, finish = 0;
  };
  std::vector<std::vector<PerIter>> it(static_cast<std::size_t>(n), std::vector<PerIter>(static_cast<std::size_t>(rounds)));
  std::vector<int> pushed(static_cast<std::size_t>(n), 0);
  std::vector<double> last_arrival(static_cast<std::size_t>(n), 0.0);
  std::vector<std::deque<double>> intervals(static_cast<std::size_t>(n));
  std::vector<int> blocked;
  std::vector<double> first_release(static_cast<std::size_t>(rounds), std::numeric_limits<double>::infinity());
  BaselineRun out;

  struct Push {
    int worker;
  };
  EventQueue<Push> q;

  auto schedule_push = [&](int w, int k, double start) {
    auto& r = it[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)];
    r.push_lat = *deliver(net, Edge::worker_controller, 0.0, net_rng);
    r.arrival = start + work.pre_sync[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)] + r.push_lat;
    q.push(r.arrival, Push{w});
  };

  auto mean_iter = [&](int w) {
    const auto& d = intervals[static_cast<std::size_t>(w)];
    if (d.empty()) return last_arrival[static_cast<std::size_t>(w)];
    return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(d.size());
  };

  auto threshold_for = [&](int w, double now, int min_clock) -> int {
    switch (spec.kind) {
      case SyncKind::asp: return std::numeric_limits<int>::max();
      case SyncKind::bsp: return 0;
      case SyncKind::ssp: return spec.s;
      case SyncKind::dssp: {
        double advance = 0.0, slowest = 0.0;
        for (int v = 0; v < n; ++v) {
          if (pushed[static_cast<std::size_t>(v)] != min_clock) continue;
          advance = std::max(advance, last_arrival[static_cast<std::size_t>(v)] + mean_iter(v));
          slowest = std::max(slowest, mean_iter(v));
        }
        return dssp_threshold(spec.s, spec.r_max, dssp_estimate(now, mean_iter(w), advance, slowest));
      }
      default: return 0;
    }
  };

  auto release = [&](int w, double now, int min_clock, int threshold) {
    const int k = pushed[static_cast<std::size_t>(w)] - 1;
    auto& r = it[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)];
    r.release = now;
    r.reply_lat = *deliver(net, Edge::worker_controller, 0.0, net_rng);
    const auto& lt = work.locals[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)];
    r.finish = now + r.reply_lat + cfg.sync_task_ms + lt[0] + lt[1];
    first_release[static_cast<std::size_t>(k)] = std::min(first_release[static_cast<std::size_t>(k)], now);
    if (record) {
      const int max_clock = *std::max_element(pushed.begin(), pushed.end());
      out.releases.push_back({now, w, k + 1, min_clock, max_clock, threshold});
    }
    if (k + 1 < rounds) schedule_push(w, k + 1, r.finish);
  };

  for (int w = 0; w < n; ++w) schedule_push(w, 0, 0.0);
  while (auto e = q.advance()) {
    const double now = e->time;
    const int w = e->payload.worker;
    auto& pw = pushed[static_cast<std::size_t>(w)];
    ++pw;
    if (pw > 1) {
      auto& d = intervals[static_cast<std::size_t>(w)];
      d.push_back(now - last_arrival[static_cast<std::size_t>(w)]);
      if (d.size() > 5) d.pop_front();
    }
    last_arrival[static_cast<std::size_t>(w)] = now;
    blocked.push_back(w);
    // Re-check every blocked worker in arrival order; the min clock may
    // have advanced.
    bool progress = true;
    while (progress) {
      progress = false;
      const int min_clock = *std::min_element(pushed.begin(), pushed.end());
      for (std::size_t i = 0; i < blocked.size(); ++i) {
        const int v = blocked[i];
        const int th = threshold_for(v, now, min_clock);
        const int clock = pushed[static_cast<std::size_t>(v)];
        const bool pass = spec.kind == SyncKind::asp || clock - min_clock <= th;
        if (!pass) continue;
        blocked.erase(blocked.begin() + static_cast<std::ptrdiff_t>(i));
        release(v, now, min_clock, th);
        progress = true;
        break;
      }
    }
  }
  if (!blocked.empty()) throw InternalConsistencyError("baseline ended with blocked workers");

  double prev_end = 0.0;
  for (int k = 0; k < rounds; ++k) {
    IterationMetrics m;
    double end = 0.0, comm = 0.0, comp = 0.0;
    int arrived = 0;
    for (int w = 0; w < n; ++w) {
      const auto& r = it[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)];
      const auto& lt = work.locals[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)];
      end = std::max(end, r.finish);
      comm += r.push_lat + (r.release - r.arrival) + r.reply_lat;
      comp += work.pre_sync[static_cast<std::size_t>(w)][static_cast<std::size_t>(k)] + cfg.sync_task_ms + lt[0] + lt[1];
      if (r.arrival <= first_release[static_cast<std::size_t>(k)]) ++arrived;
    }
    m.runtime_per_sync_point = end - prev_end;
    prev_end = end;
    m.success_option = 1;
    if (spec.kind == SyncKind::asp) {
      m.participation = 1.0;
      m.participation_applicable = false;
    } else {
      m.participation = static_cast<double>(arrived) / n;
    }
    m.synced_workers = arrived;
    m.computation_ms = comp / n;
    m.communication_ms = comm / n;
    m.communication_inclusive_ms = m.communication_ms;
    m.decision_messages = 2 * n;
    out.iterations.push_back(m);
  }
  return out;
}

}  // namespace fastsync::sim
