#pragma once

// Fixes the three sync options of one iteration from the two cluster models.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fastsync/clustering.hpp"
#include "fastsync/error.hpp"
#include "fastsync/game.hpp"
#include "fastsync/stats.hpp"

namespace fastsync::sched {

using clustering::ClusterModel;
using game::Decision;
using stats::Gaussian;

inline constexpr double kPMin = 0.5;
inline constexpr double kPMax = 0.999;
inline constexpr double kQuorumSlack = 1e-9;

// X'_1 = X_1 + q(D_early + D_local) as written, or just q(D_early + D_local).
enum class Mode { literal, corrected };

inline const char* to_string(Mode m) { return m == Mode::literal ? "literal" : "corrected"; }

// 0.500, 0.505, ..., 0.995, then 0.999.
inline const std::vector<double>& percentile_grid() {
  static const std::vector<double> grid = [] {
    std::vector<double> g;
    for (int i = 0; i <= 99; ++i) g.push_back(0.5 + 0.005 * i);
    g.push_back(kPMax);
    return g;
  }();
  return grid;
}

struct OptionEntry {
  double t_s = 0.0;
  std::array<double, 2> thresholds{0.0, 0.0};
  std::array<double, 2> percentiles{0.0, 0.0};
  std::array<bool, 2> local_task_planned{false, false};
  bool saturated = false;
};

struct OptionDerivation {
  double expected_wait_w2 = 0.0;
  double expected_wait_w1 = 0.0;
  double expected_local_1 = 0.0;
  double expected_local_2 = 0.0;
  Decision decision_1 = Decision::wait_for_sync;
  Decision decision_2 = Decision::wait_for_sync;
  bool local_model_missing = false;
};

struct SyncSchedule {
  std::array<OptionEntry, 3> options;
  OptionDerivation derivation;
  double alpha = 0.0;
  int n_total = 0;
  Mode mode = Mode::literal;

  const OptionEntry& option(int c) const { return options.at(static_cast<std::size_t>(c - 1)); }
  double t_s(int c) const { return option(c).t_s; }
  bool saturated() const {
    return std::any_of(options.begin(), options.end(), [](const OptionEntry& o) { return o.saturated; });
  }
};

inline double quorum(double alpha, int n) { return alpha * static_cast<double>(n); }

inline void require_feasible(std::size_t c1, std::size_t c2, double alpha, int n) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("alpha must lie in [0,1]");
  if (n <= 0) throw DomainError("N must be positive");
  const double need = quorum(alpha, n);
  const double have = static_cast<double>(c1 + c2);
  if (have + kQuorumSlack < need)
    throw InfeasibilityError("quorum alpha*N = " + std::to_string(need) + " exceeds |C1|+|C2| = " +
                                 std::to_string(c1 + c2),
                             need, have);
}

inline double threshold_from(Mode mode, double base, const Gaussian& summed, double p) {
  const double q = stats::gaussian_quantile(summed, p);
  return mode == Mode::literal ? base + q : q;
}

inline OptionEntry fix_first_option(const ClusterModel& fast, const ClusterModel& slow, double alpha, int n) {
  require_feasible(fast.size(), slow.size(), alpha, n);
  OptionEntry e;
  const double raw = quorum(alpha, n) / static_cast<double>(fast.size() + slow.size());
  e.saturated = raw > kPMax;
  const double p = std::clamp(raw, kPMin, kPMax);
  e.percentiles = {p, p};
  e.thresholds = {stats::gaussian_quantile(fast.model.early, p), stats::gaussian_quantile(slow.model.early, p)};
  e.t_s = std::max(e.thresholds[0], e.thresholds[1]);
  return e;
}

struct SecondPoint {
  double x1 = 0.0;  // X'_1
  double x2 = 0.0;  // X'_2
  double wait_w2 = 0.0;
  double local_1 = 0.0;
  Decision decision = Decision::wait_for_sync;
  bool local_model_missing = false;

  double t_s() const { return std::max(x1, x2); }
};

// Option 2 at one percentile pair; x1 is option 1's X_1.
inline SecondPoint evaluate_second(const ClusterModel& fast, const ClusterModel& slow, double x1, double p1, double p2,
                                   const game::PayoffParameters& params, Mode mode) {
  SecondPoint s;
  s.x2 = stats::gaussian_quantile(slow.model.late, p2);
  s.wait_w2 = std::max(0.0, s.x2 - x1);
  if (!fast.model.local_early) {
    s.local_model_missing = true;
    s.x1 = x1;
    return s;
  }
  s.local_1 = fast.model.local_early->mean;
  s.decision = game::cluster_decision(std::max(0.0, s.local_1), s.wait_w2, params);
  if (s.decision == Decision::wait_for_sync) {
    s.x1 = x1;
  } else {
    s.x1 = threshold_from(mode, x1, stats::sum_gaussians(fast.model.early, *fast.model.local_early), p1);
  }
  return s;
}

struct ThirdPoint {
  double x1 = 0.0;  // X''_1
  double x2 = 0.0;  // X''_2
  double wait_w1 = 0.0;
  double local_2 = 0.0;
  Decision decision = Decision::wait_for_sync;
  bool local_model_missing = false;

  double t_s() const { return std::max(x1, x2); }
};

// Option 3 at one percentile pair; x1 is X_1 and x2 is option 2's X'_2.
inline ThirdPoint evaluate_third(const ClusterModel& fast, const ClusterModel& slow, double x1, double x2, double p1,
                                 double p2, const game::PayoffParameters& params, Mode mode) {
  ThirdPoint t;
  Gaussian lo1_late{0.0, 0.0};
  if (fast.model.local_late) lo1_late = *fast.model.local_late;
  else t.local_model_missing = true;
  t.x1 = threshold_from(mode, x1, stats::sum_gaussians(fast.model.early, lo1_late), p1);
  t.wait_w1 = std::max(0.0, t.x1 - x2);
  if (!slow.model.local_early) {
    t.local_model_missing = true;
    t.x2 = x2;
    return t;
  }
  t.local_2 = slow.model.local_early->mean;
  t.decision = game::cluster_decision(std::max(0.0, t.local_2), t.wait_w1, params);
  if (t.decision == Decision::wait_for_sync) {
    t.x2 = x2;
  } else {
    t.x2 = threshold_from(mode, x2, stats::sum_gaussians(slow.model.late, *slow.model.local_early), p2);
  }
  return t;
}

struct GridChoice {
  double p1 = kPMax;
  double p2 = kPMax;
  double t_s = 0.0;
  bool saturated = false;
};

inline bool meets_quorum(double p1, double p2, std::size_t c1, std::size_t c2, double alpha, int n) {
  return p1 * static_cast<double>(c1) + p2 * static_cast<double>(c2) >= quorum(alpha, n) - kQuorumSlack;
}

// Minimizes t_s over the grid subject to the quorum and to t_s >= lower.
// Equal t_s prefers the larger expected participation, then scan order.
inline GridChoice grid_search(std::size_t c1, std::size_t c2, double alpha, int n, double lower,
                              const std::function<double(double, double)>& t_of) {
  const auto& grid = percentile_grid();
  std::optional<GridChoice> best;
  double best_part = 0.0;
  bool any_quorum = false;
  for (double p1 : grid)
    for (double p2 : grid) {
      if (!meets_quorum(p1, p2, c1, c2, alpha, n)) continue;
      any_quorum = true;
      const double t = t_of(p1, p2);
      if (t < lower) continue;
      const double part = p1 * static_cast<double>(c1) + p2 * static_cast<double>(c2);
      if (!best || t < best->t_s || (t == best->t_s && part > best_part)) {
        best = GridChoice{p1, p2, t, false};
        best_part = part;
      }
    }
  if (!any_quorum) {
    // alpha*N fits in |C1|+|C2| but needs percentiles above p_max.
    GridChoice g{kPMax, kPMax, t_of(kPMax, kPMax), true};
    if (g.t_s < lower) throw InternalConsistencyError("sync options are not monotone at the saturated percentile");
    return g;
  }
  if (!best) throw InternalConsistencyError("no quorum-feasible percentile pair keeps the sync options monotone");
  return *best;
}

inline std::pair<OptionEntry, OptionDerivation> fix_second_option(const ClusterModel& fast, const ClusterModel& slow,
                                                                  double alpha, int n, const OptionEntry& option1,
                                                                  const game::PayoffParameters& params,
                                                                  Mode mode = Mode::literal) {
  require_feasible(fast.size(), slow.size(), alpha, n);
  const double x1 = option1.thresholds[0];
  const GridChoice g = grid_search(fast.size(), slow.size(), alpha, n, option1.t_s, [&](double p1, double p2) {
    return evaluate_second(fast, slow, x1, p1, p2, params, mode).t_s();
  });
  const SecondPoint s = evaluate_second(fast, slow, x1, g.p1, g.p2, params, mode);
  OptionEntry e;
  e.t_s = s.t_s();
  e.thresholds = {s.x1, s.x2};
  e.percentiles = {g.p1, g.p2};
  e.local_task_planned = {s.decision == Decision::run_local_task, false};
  e.saturated = g.saturated;
  OptionDerivation d;
  d.expected_wait_w2 = s.wait_w2;
  d.expected_local_1 = s.local_1;
  d.decision_1 = s.decision;
  d.local_model_missing = s.local_model_missing;
  return {e, d};
}

inline std::pair<OptionEntry, OptionDerivation> fix_third_option(const ClusterModel& fast, const ClusterModel& slow,
                                                                 double alpha, int n, const OptionEntry& option1,
                                                                 const OptionEntry& option2,
                                                                 const OptionDerivation& derivation2,
                                                                 const game::PayoffParameters& params,
                                                                 Mode mode = Mode::literal) {
  require_feasible(fast.size(), slow.size(), alpha, n);
  const double x1 = option1.thresholds[0];
  const double x2 = option2.thresholds[1];
  const GridChoice g = grid_search(fast.size(), slow.size(), alpha, n, option2.t_s, [&](double p1, double p2) {
    return evaluate_third(fast, slow, x1, x2, p1, p2, params, mode).t_s();
  });
  const ThirdPoint t = evaluate_third(fast, slow, x1, x2, g.p1, g.p2, params, mode);
  OptionEntry e;
  e.t_s = t.t_s();
  e.thresholds = {t.x1, t.x2};
  e.percentiles = {g.p1, g.p2};
  e.local_task_planned = {true, t.decision == Decision::run_local_task};
  e.saturated = g.saturated;
  OptionDerivation d = derivation2;
  d.expected_wait_w1 = t.wait_w1;
  d.expected_local_2 = t.local_2;
  d.decision_2 = t.decision;
  d.local_model_missing = derivation2.local_model_missing || t.local_model_missing;
  return {e, d};
}

inline SyncSchedule build_schedule(const ClusterModel& fast, const ClusterModel& slow, double alpha, int n,
                                   const game::PayoffParameters& params, Mode mode = Mode::literal) {
  fast.model.validate();
  slow.model.validate();
  SyncSchedule s;
  s.alpha = alpha;
  s.n_total = n;
  s.mode = mode;
  s.options[0] = fix_first_option(fast, slow, alpha, n);
  auto [o2, d2] = fix_second_option(fast, slow, alpha, n, s.options[0], params, mode);
  s.options[1] = o2;
  auto [o3, d3] = fix_third_option(fast, slow, alpha, n, s.options[0], o2, d2, params, mode);
  s.options[2] = o3;
  s.derivation = d3;
  if (!(s.options[0].t_s <= s.options[1].t_s && s.options[1].t_s <= s.options[2].t_s))
    throw InternalConsistencyError("sync options are not monotone");
  return s;
}

inline std::string describe(const SyncSchedule& s) {
  std::string out;
  char buf[256];
  for (int c = 1; c <= 3; ++c) {
    const OptionEntry& o = s.option(c);
    std::snprintf(buf, sizeof buf, "option %d: t_s=%.3f X=(%.3f, %.3f) p=(%.3f, %.3f) local=(%d, %d)%s\n", c, o.t_s,
                  o.thresholds[0], o.thresholds[1], o.percentiles[0], o.percentiles[1],
                  int(o.local_task_planned[0]), int(o.local_task_planned[1]), o.saturated ? " saturated" : "");
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "t_w2=%.3f t_w1=%.3f t_l1=%.3f t_l2=%.3f decisions=(%s, %s) mode=%s\n",
                s.derivation.expected_wait_w2, s.derivation.expected_wait_w1, s.derivation.expected_local_1,
                s.derivation.expected_local_2, game::to_string(s.derivation.decision_1),
                game::to_string(s.derivation.decision_2), to_string(s.mode));
  out += buf;
  return out;
}

}  // namespace fastsync::sched
