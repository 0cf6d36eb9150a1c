#pragma once

// Worker speed profiles, per-worker random streams and synthetic traces.

#include <cstdint>
#include <random>
#include <vector>

#include "fastsync/sim/config.hpp"
#include "fastsync/stats.hpp"

namespace fastsync::sim {

using stats::Rng;

enum class Stream : std::uint32_t { profile = 1, exec = 2, local = 3, network = 4, protocol = 5, isolation = 6 };

// Independent stream per (seed, run, purpose, worker). Synchronizers that
// share a seed see the same per-worker workloads.
inline Rng make_rng(std::uint64_t seed, int run, Stream stream, int worker = -1) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(worker + 1)};
  return Rng(seq);
}

struct WorkerProfile {
  double base_mean = 25.0;
  double stddev = 2.0;
  double drift = 0.0;  // ms per iteration
  bool slow_group = false;
};

inline std::vector<WorkerProfile> make_profiles(const SimulationConfig& cfg, Rng& rng) {
  std::vector<WorkerProfile> out(static_cast<std::size_t>(cfg.n_workers));
  const int n_slow = static_cast<int>(std::lround(cfg.slow_fraction * cfg.n_workers));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < cfg.n_workers; ++i) {
    WorkerProfile& p = out[static_cast<std::size_t>(i)];
    p.slow_group = i >= cfg.n_workers - n_slow;
    const double offset = u(rng) * cfg.heterogeneity_spread_ms;
    const double drift = u(rng) * cfg.drift_rate;
    p.base_mean = cfg.task_mean() * (p.slow_group ? cfg.slow_factor : 1.0) + offset;
    p.stddev = cfg.worker_exec_stddev;
    p.drift = drift;
  }
  return out;
}

// Pre-sync execution time of one worker at global iteration k. Two draws
// are consumed every call regardless of the branch taken.
inline double draw_exec(const WorkerProfile& p, int k, const SimulationConfig& cfg, Rng& rng) {
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  const double z = std::normal_distribution<double>(0.0, 1.0)(rng);
  const double mean = p.base_mean + p.drift * static_cast<double>(k);
  const bool late = u < cfg.late_probability;
  const double m = late ? mean * cfg.late_factor : mean;
  const double sd = late ? p.stddev * cfg.late_factor : p.stddev;
  return std::max(0.0, m + z * sd);
}

inline double draw_local(const SimulationConfig& cfg, Rng& rng) {
  if (cfg.local_task_max <= cfg.local_task_min) return cfg.local_task_min;
  return std::uniform_real_distribution<double>(cfg.local_task_min, cfg.local_task_max)(rng);
}

// Per-worker runtime series; runtimes[w][k] belongs to worker_ids[w].
struct TraceSet {
  std::vector<int> worker_ids;
  std::vector<std::vector<double>> runtimes;

  std::size_t workers() const { return worker_ids.size(); }
  std::size_t iterations() const { return runtimes.empty() ? 0 : runtimes.front().size(); }

  friend bool operator==(const TraceSet&, const TraceSet&) = default;
};

inline TraceSet generate_traces(const SimulationConfig& cfg, Rng& rng) {
  const auto profiles = make_profiles(cfg, rng);
  TraceSet t;
  for (int w = 0; w < cfg.n_workers; ++w) {
    t.worker_ids.push_back(w);
    std::vector<double> series;
    for (int k = 0; k < cfg.trace_iterations; ++k)
      series.push_back(draw_exec(profiles[static_cast<std::size_t>(w)], k, cfg, rng));
    t.runtimes.push_back(std::move(series));
  }
  return t;
}

// Profiles that replay an ingested trace's per-worker mean and spread.
inline std::vector<WorkerProfile> profiles_from_traces(const TraceSet& traces) {
  std::vector<WorkerProfile> out;
  std::vector<double> means;
  for (const auto& series : traces.runtimes) {
    const auto g = stats::detail::moments(series);
    WorkerProfile p;
    p.base_mean = g.mean;
    p.stddev = g.stddev();
    means.push_back(g.mean);
    out.push_back(p);
  }
  std::vector<double> sorted = means;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted.empty() ? 0.0 : sorted[sorted.size() / 2];
  for (std::size_t i = 0; i < out.size(); ++i) out[i].slow_group = means[i] >= median;
  return out;
}

}  // namespace fastsync::sim
