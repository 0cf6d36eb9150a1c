#pragma once

#include <optional>
#include <random>
#include <vector>

#include "fastsync/stats.hpp"

namespace fastsync::sim {

enum class Edge { worker_worker, worker_controller };

struct NetworkModel {
  stats::Gaussian ww{2.0, 0.3 * 0.3};
  stats::Gaussian wc{25.0, 2.0 * 2.0};
  double drop_probability = 0.0;   // worker-worker messages only
  std::vector<bool> isolated;      // per worker, for the current episode

  bool is_isolated(int w) const {
    return w >= 0 && static_cast<std::size_t>(w) < isolated.size() && isolated[static_cast<std::size_t>(w)];
  }
};

// Arrival time, or nullopt when the message is lost. A drop coin is always
// drawn for worker-worker messages so the stream stays aligned.
inline std::optional<double> deliver(const NetworkModel& net, Edge edge, double now, stats::Rng& rng, int from = -1,
                                     int to = -1) {
  if (edge == Edge::worker_controller) return now + stats::sample(net.wc, rng);
  const double latency = stats::sample(net.ww, rng);
  const bool dropped = std::uniform_real_distribution<double>(0.0, 1.0)(rng) < net.drop_probability;
  if (dropped || net.is_isolated(from) || net.is_isolated(to)) return std::nullopt;
  return now + latency;
}

// Upper bound used for the termination check: mean plus six sigma.
inline double max_delay(const stats::Gaussian& g) { return g.mean + 6.0 * g.stddev(); }

}  // namespace fastsync::sim
