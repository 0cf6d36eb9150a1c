#pragma once

#include <algorithm>
#include <thread>
#include <vector>

#include "fastsync/sim/baselines.hpp"
#include "fastsync/sim/config.hpp"
#include "fastsync/sim/fastsync_run.hpp"
#include "fastsync/sim/metrics.hpp"
#include "fastsync/sim/workers.hpp"

namespace fastsync::sim {

// One seeded repetition of `rounds` iterations. Worker profiles come from
// the config unless given, e.g. replayed from ingested traces.
inline std::vector<IterationMetrics> run_once(const SimulationConfig& cfg, const SynchronizerSpec& spec, int run,
                                              const std::vector<WorkerProfile>* given = nullptr) {
  Rng profile_rng = make_rng(cfg.seed, run, Stream::profile);
  const auto profiles = given ? *given : make_profiles(cfg, profile_rng);
  if (static_cast<int>(profiles.size()) != cfg.n_workers)
    throw ConfigError("n_workers", 0, "does not match the number of worker profiles");
  std::vector<std::vector<double>> history, local_history;
  const WorkloadDraws work = draw_workload(cfg, profiles, run, &history, &local_history);
  if (spec.kind == SyncKind::fastsync)
    return run_fastsync(cfg, profiles, work, std::move(history), std::move(local_history), run).iterations;
  return run_baseline(cfg, spec, profiles, work, run).iterations;
}

inline int default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hw, 1u, 16u));
}

// Runs are independent; results are merged in run order so the report does
// not depend on scheduling.
inline MetricsReport run_experiment(const SimulationConfig& cfg, const SynchronizerSpec& spec, int threads = 0,
                                    const std::vector<WorkerProfile>* profiles = nullptr) {
  cfg.validate();
  if (threads <= 0) threads = default_threads();
  std::vector<std::vector<double>> per_run(static_cast<std::size_t>(cfg.runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.runs));
  auto work = [&](int t) {
    for (int r = t; r < cfg.runs; r += threads) {
      try {
        per_run[static_cast<std::size_t>(r)] = summarize_run(run_once(cfg, spec, r, profiles));
      } catch (...) {
        errors[static_cast<std::size_t>(r)] = std::current_exception();
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  MetricsReport report;
  report.synchronizer = spec.name();
  for (const auto& values : per_run) report.add_run(values);
  const double infeasible = report.mean("infeasible_iterations");
  if (infeasible >= cfg.rounds) report.status = "infeasible";
  else if (infeasible > 0) report.status = "partially-infeasible";
  return report;
}

}  // namespace fastsync::sim
