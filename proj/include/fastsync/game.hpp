#pragma once

// Two-cluster, three-pass extensive-form synchronization game.
//
// Players are the fast (index 0) and slow (index 1) clusters. Each pass is
// one sync option. Chance (who is late, who got a notification) is an
// explicit Scenario input so the tree of strategic choices can be walked
// exhaustively.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "fastsync/error.hpp"

namespace fastsync::game {

inline constexpr int kOptions = 3;

enum class Strategy { sync, no_sync_late, no_sync_late_notification };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::sync: return "sync";
    case Strategy::no_sync_late: return "no-sync-late";
    case Strategy::no_sync_late_notification: return "no-sync-late-notification";
  }
  return "?";
}

enum class Decision { wait_for_sync, run_local_task };

inline const char* to_string(Decision d) { return d == Decision::wait_for_sync ? "wait" : "local"; }

struct PayoffParameters {
  std::array<double, kOptions> sync_utils{100.0, 60.0, 30.0};  // U_c
  std::array<double, kOptions> abort_costs{5.0, 10.0, 20.0};   // F_c
  double wait_rate = 1.0;             // omega(t) = wait_rate * t
  double local_rate = 1.0;            // L(t) = local_rate * t
  double pre_notify_wait_rate = 1.0;  // delta(t) = pre_notify_wait_rate * t
  // The game is played between clusters, so |N_s| counts syncing players.
  int sync_players = 2;
  double max_local_ms = 10.0;

  double per_player_utility(int option) const;

  // Definitions 1 and 2 as closed-form inequalities.
  void validate() const;
};

inline double sync_utility(double total_utility, int n_sync) {
  if (n_sync <= 0) throw DomainError("sync_utility: n_sync must be >= 1");
  return total_utility / static_cast<double>(n_sync);
}

inline double PayoffParameters::per_player_utility(int option) const {
  return sync_utility(sync_utils.at(static_cast<std::size_t>(option - 1)), sync_players);
}

inline double waiting_cost(double t, const PayoffParameters& p) {
  if (t < 0.0) throw DomainError("waiting_cost: negative duration");
  return p.wait_rate * t;
}

inline double local_task_utility(double t, const PayoffParameters& p) {
  if (t < 0.0) throw DomainError("local_task_utility: negative duration");
  return p.local_rate * t;
}

inline double notification_wait_cost(double t, const PayoffParameters& p) {
  if (t < 0.0) throw DomainError("notification_wait_cost: negative duration");
  return p.pre_notify_wait_rate * t;
}

inline void PayoffParameters::validate() const {
  for (double r : {wait_rate, local_rate, pre_notify_wait_rate})
    if (!(r >= 0.0) || !std::isfinite(r)) throw InvalidParametersError("payoff rates must be finite and >= 0");
  if (sync_players < 1) throw InvalidParametersError("sync_players must be >= 1");
  if (max_local_ms < 0.0) throw InvalidParametersError("max_local_ms must be >= 0");
  const double s1 = per_player_utility(1), s2 = per_player_utility(2), s3 = per_player_utility(3);
  const double l = local_task_utility(max_local_ms, *this);
  if (!(s1 > s2 && s2 > s3)) throw InvalidParametersError("sync utilities must satisfy S1 > S2 > S3");
  if (!(s1 > s2 + l && s2 + l > s3 + l))
    throw InvalidParametersError("sync utilities must satisfy S1 > S2 + L(max local) > S3 + L(max local)");
  if (!(abort_costs[0] < abort_costs[1] && abort_costs[1] < abort_costs[2]))
    throw InvalidParametersError("abort costs must satisfy F1 < F2 < F3");
}

// Runs the local task iff its utility strictly exceeds the cost of waiting.
inline Decision cluster_decision(double local_duration, double expected_wait, const PayoffParameters& p) {
  return local_task_utility(local_duration, p) > waiting_cost(expected_wait, p) ? Decision::run_local_task
                                                                                 : Decision::wait_for_sync;
}

// What chance dealt one cluster at one pass.
struct ClusterPass {
  bool late = false;
  bool notified = false;             // received a late notification about the other cluster
  double wait_ms = 0.0;              // waiting time if this pass ends in a sync
  std::optional<double> local_ms;    // local task available while skipping this pass
  double notify_wait_ms = 0.0;       // time waited before the notification arrived
};

struct PassScenario {
  std::array<ClusterPass, 2> cluster;
};

struct Scenario {
  std::array<PassScenario, kOptions> passes;

  static Scenario all_on_time() { return Scenario{}; }
};

enum class TerminalKind { synced, aborted };

struct Terminal {
  TerminalKind kind = TerminalKind::aborted;
  int option = 1;

  friend bool operator==(const Terminal&, const Terminal&) = default;
};

using Profile = std::array<Strategy, 2>;

struct GameOutcome {
  std::vector<Profile> path;
  std::vector<std::array<double, 2>> increments;  // per pass, per cluster
  double v1 = 0.0;
  double v2 = 0.0;
  double p = 0.0;
  Terminal terminal;
};

inline std::vector<Strategy> feasible_strategies(const ClusterPass& c) {
  if (c.late) return {Strategy::no_sync_late};
  std::vector<Strategy> out{Strategy::sync, Strategy::no_sync_late};
  if (c.notified) out.push_back(Strategy::no_sync_late_notification);
  return out;
}

struct PassResult {
  std::array<double, 2> increment{0.0, 0.0};
  std::optional<Terminal> terminal;
};

// All payoff accounting for one pass lives here.
//  both sync            -> synced:   S_c - omega(wait)
//  exactly one syncs    -> aborted:  -F_c (plus the waiter's omega(wait))
//  neither syncs        -> skipped:  a notified cluster gains L(t_l) when the
//                                    local task beats waiting, minus delta;
//                                    skipping the last option aborts with -F_3
inline PassResult pass_payoff(const PayoffParameters& params, const PassScenario& pass, int option,
                              const Profile& profile) {
  PassResult r;
  const bool s0 = profile[0] == Strategy::sync, s1 = profile[1] == Strategy::sync;
  const double uc = params.per_player_utility(option);
  const double fc = params.abort_costs[static_cast<std::size_t>(option - 1)];
  if (s0 && s1) {
    for (int k = 0; k < 2; ++k) r.increment[k] = uc - waiting_cost(pass.cluster[k].wait_ms, params);
    r.terminal = Terminal{TerminalKind::synced, option};
    return r;
  }
  if (s0 || s1) {
    for (int k = 0; k < 2; ++k) {
      r.increment[k] = -fc;
      if (profile[k] == Strategy::sync) r.increment[k] -= waiting_cost(pass.cluster[k].wait_ms, params);
    }
    r.terminal = Terminal{TerminalKind::aborted, option};
    return r;
  }
  for (int k = 0; k < 2; ++k) {
    const ClusterPass& c = pass.cluster[k];
    if (profile[k] == Strategy::no_sync_late_notification) {
      if (c.local_ms && cluster_decision(*c.local_ms, c.wait_ms, params) == Decision::run_local_task)
        r.increment[k] += local_task_utility(*c.local_ms, params);
      r.increment[k] -= notification_wait_cost(c.notify_wait_ms, params);
    }
    if (option == kOptions) r.increment[k] -= fc;
  }
  if (option == kOptions) r.terminal = Terminal{TerminalKind::aborted, option};
  return r;
}

namespace detail {

inline void walk(const PayoffParameters& params, const Scenario& scenario, int option, GameOutcome partial,
                 std::vector<GameOutcome>& out) {
  const PassScenario& pass = scenario.passes[static_cast<std::size_t>(option - 1)];
  for (Strategy a : feasible_strategies(pass.cluster[0]))
    for (Strategy b : feasible_strategies(pass.cluster[1])) {
      const Profile profile{a, b};
      const PassResult r = pass_payoff(params, pass, option, profile);
      GameOutcome next = partial;
      next.path.push_back(profile);
      next.increments.push_back(r.increment);
      next.v1 += r.increment[0];
      next.v2 += r.increment[1];
      if (r.terminal) {
        next.p = next.v1 + next.v2;
        next.terminal = *r.terminal;
        out.push_back(std::move(next));
      } else {
        walk(params, scenario, option + 1, std::move(next), out);
      }
    }
}

}  // namespace detail

// Every root-to-terminal path in enumeration order; payoffs are cumulative.
inline std::vector<GameOutcome> enumerate_game(const PayoffParameters& params, const Scenario& scenario) {
  params.validate();
  std::vector<GameOutcome> out;
  detail::walk(params, scenario, 1, GameOutcome{}, out);
  return out;
}

// Highest cumulative payoff; ties go to the earliest terminal option, then
// to enumeration order.
inline GameOutcome optimal_profile(const PayoffParameters& params, const Scenario& scenario) {
  const auto outcomes = enumerate_game(params, scenario);
  const GameOutcome* best = &outcomes.front();
  for (const auto& o : outcomes) {
    if (o.p > best->p || (o.p == best->p && o.terminal.option < best->terminal.option)) best = &o;
  }
  return *best;
}

}  // namespace fastsync::game
