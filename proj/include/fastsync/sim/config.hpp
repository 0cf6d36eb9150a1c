#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "fastsync/error.hpp"
#include "fastsync/game.hpp"
#include "fastsync/scheduler.hpp"
#include "fastsync/sim/network.hpp"

namespace fastsync::sim {

enum class TaskProfile { short_tasks, long_tasks };

inline const char* to_string(TaskProfile p) { return p == TaskProfile::short_tasks ? "short" : "long"; }

struct SimulationConfig {
  int n_workers = 20;
  double alpha = 0.7;
  int rounds = 200;
  int runs = 100;
  std::uint64_t seed = 1;

  TaskProfile task_profile = TaskProfile::short_tasks;
  double heterogeneity_spread_ms = 1.0;  // per-worker offset, uniform in +-spread
  double slow_fraction = 0.5;
  double slow_factor = 1.28;
  double worker_exec_stddev = 2.0;
  double late_probability = 0.1;  // chance an iteration straggles
  double late_factor = 1.6;
  double drift_rate = 0.0;        // per-worker drift drawn uniform in +-rate, ms/iteration

  double ww_mean = 2.0;
  double ww_stddev = 0.3;
  double wc_mean = 25.0;
  double wc_stddev = 2.0;

  double local_task_min = 5.0;
  double local_task_max = 10.0;
  double sync_task_ms = 5.0;

  double clustering_cost = 20.0;
  int clustering_frequency = 5;  // 0 clusters once at the start
  int clustering_window = 10;

  double drop_probability = 0.0;
  double isolation_probability = 0.0;  // per worker per iteration

  int late_threshold = 3;
  sched::Mode mode = sched::Mode::literal;
  game::PayoffParameters payoff;

  int trace_iterations = 200;

  double task_mean() const { return task_profile == TaskProfile::short_tasks ? 25.0 : 80.0; }

  NetworkModel network() const {
    NetworkModel n;
    n.ww = {ww_mean, ww_stddev * ww_stddev};
    n.wc = {wc_mean, wc_stddev * wc_stddev};
    n.drop_probability = drop_probability;
    n.isolated.assign(static_cast<std::size_t>(n_workers), false);
    return n;
  }

  game::PayoffParameters payoff_params() const {
    game::PayoffParameters p = payoff;
    p.max_local_ms = local_task_max;
    return p;
  }

  void validate() const {
    auto fail = [](const char* key, const std::string& msg) { throw ConfigError(key, 0, msg); };
    auto prob = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!prob(alpha)) fail("alpha", "must lie in [0,1]");
    if (n_workers < 2) fail("n_workers", "must be >= 2");
    if (rounds < 1) fail("rounds", "must be >= 1");
    if (runs < 1) fail("runs", "must be >= 1");
    if (!prob(slow_fraction)) fail("slow_fraction", "must lie in [0,1]");
    if (!(slow_factor > 0.0)) fail("slow_factor", "must be > 0");
    if (heterogeneity_spread_ms < 0.0) fail("heterogeneity_spread_ms", "must be >= 0");
    if (worker_exec_stddev < 0.0) fail("worker_exec_stddev", "must be >= 0");
    if (!prob(late_probability)) fail("late_probability", "must lie in [0,1]");
    if (!(late_factor >= 1.0)) fail("late_factor", "must be >= 1");
    if (drift_rate < 0.0) fail("drift_rate", "must be >= 0");
    if (ww_mean < 0.0) fail("ww_msg.mean", "must be >= 0");
    if (ww_stddev < 0.0) fail("ww_msg.stddev", "must be >= 0");
    if (wc_mean < 0.0) fail("wc_msg.mean", "must be >= 0");
    if (wc_stddev < 0.0) fail("wc_msg.stddev", "must be >= 0");
    if (local_task_min < 0.0) fail("local_task.min", "must be >= 0");
    if (local_task_max < local_task_min) fail("local_task.max", "must be >= local_task.min");
    if (sync_task_ms < 0.0) fail("sync_task_ms", "must be >= 0");
    if (clustering_cost < 0.0) fail("clustering_cost", "must be >= 0");
    if (clustering_frequency < 0) fail("clustering_frequency", "must be >= 0");
    if (clustering_window < 1) fail("clustering_window", "must be >= 1");
    if (!prob(drop_probability)) fail("partition.drop_probability", "must lie in [0,1]");
    if (!prob(isolation_probability)) fail("partition.isolation_probability", "must lie in [0,1]");
    if (late_threshold < 1) fail("late_threshold", "must be >= 1");
    if (trace_iterations < 1) fail("trace_iterations", "must be >= 1");
    try {
      payoff_params().validate();
    } catch (const InvalidParametersError& e) {
      fail("payoff", e.what());
    }
  }
};

enum class SyncKind { fastsync, asp, bsp, ssp, dssp };

struct SynchronizerSpec {
  SyncKind kind = SyncKind::fastsync;
  int s = 0;
  int r_max = 0;

  std::string name() const {
    switch (kind) {
      case SyncKind::fastsync: return "FastSync";
      case SyncKind::asp: return "ASP";
      case SyncKind::bsp: return "BSP";
      case SyncKind::ssp: return "SSP(" + std::to_string(s) + ")";
      case SyncKind::dssp: return "DSSP(" + std::to_string(s) + "," + std::to_string(r_max) + ")";
    }
    return "?";
  }

  // Config syntax: fastsync | asp | bsp | ssp:S | dssp:S:RMAX
  std::string token() const {
    switch (kind) {
      case SyncKind::fastsync: return "fastsync";
      case SyncKind::asp: return "asp";
      case SyncKind::bsp: return "bsp";
      case SyncKind::ssp: return "ssp:" + std::to_string(s);
      case SyncKind::dssp: return "dssp:" + std::to_string(s) + ":" + std::to_string(r_max);
    }
    return "?";
  }

  friend bool operator==(const SynchronizerSpec&, const SynchronizerSpec&) = default;
};

inline SynchronizerSpec fastsync_spec() { return {SyncKind::fastsync, 0, 0}; }
inline SynchronizerSpec bsp_spec() { return {SyncKind::bsp, 0, 0}; }
inline SynchronizerSpec asp_spec() { return {SyncKind::asp, 0, 0}; }
inline SynchronizerSpec ssp_spec(int s) { return {SyncKind::ssp, s, 0}; }
inline SynchronizerSpec dssp_spec(int s, int r_max) {
  if (s > r_max) throw ConfigError("synchronizer", 0, "dssp needs s <= r_max");
  return {SyncKind::dssp, s, r_max};
}

}  // namespace fastsync::sim
