#pragma once

// Per-worker three-option state machine and the late-notification protocol.

#include <algorithm>
#include <array>
#include <deque>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "fastsync/error.hpp"
#include "fastsync/scheduler.hpp"
#include "fastsync/stats.hpp"

namespace fastsync::protocol {

enum class ClusterTag { fast, slow, outlier };

inline const char* to_string(ClusterTag t) {
  switch (t) {
    case ClusterTag::fast: return "fast";
    case ClusterTag::slow: return "slow";
    case ClusterTag::outlier: return "outlier";
  }
  return "?";
}

enum class PhaseKind { before_option, at_option, running_local, synced, aborted };

// running_local{c} means option c was skipped and a local task runs before
// option c+1.
struct Phase {
  PhaseKind kind = PhaseKind::before_option;
  int option = 1;

  bool terminal() const { return kind == PhaseKind::synced || kind == PhaseKind::aborted; }
  friend bool operator==(const Phase&, const Phase&) = default;
  friend auto operator<=>(const Phase&, const Phase&) = default;
};

inline std::string to_string(const Phase& p) {
  const char* names[] = {"BeforeOption", "AtOption", "RunningLocal", "Synced", "Aborted"};
  return std::string(names[static_cast<int>(p.kind)]) + std::to_string(p.option);
}

struct NotificationSummary {
  int origin_worker = -1;
  ClusterTag origin_cluster = ClusterTag::fast;
  int option_index = 1;
  int sequence = 1;

  friend bool operator==(const NotificationSummary&, const NotificationSummary&) = default;
};

struct LateNotification {
  int origin_worker = -1;
  ClusterTag origin_cluster = ClusterTag::fast;
  int option_index = 1;
  int sequence = 1;
  std::vector<NotificationSummary> embedded;

  NotificationSummary summary() const { return {origin_worker, origin_cluster, option_index, sequence}; }
  friend bool operator==(const LateNotification&, const LateNotification&) = default;
};

struct WorkerState {
  int id = 0;
  ClusterTag cluster = ClusterTag::fast;
  Phase phase;
  double t_av = 0.0;
  std::vector<LateNotification> notifications_received;
  std::array<bool, 3> sent_late{false, false, false};
  double progress = 0.0;
  std::deque<double> local_tasks;  // durations of local tasks that may be pulled forward
  bool attempting = false;         // ExecuteSync issued, waiting for the outcome
};

inline constexpr int kDefaultLateThreshold = 1;

struct ProtocolParams {
  int late_threshold = kDefaultLateThreshold;
};

// True at or past the halfway checkpoint when the extrapolated finish
// (elapsed / progress) overshoots the predicted finish.
inline bool detect_lateness(const WorkerState& state, double predicted_finish, double now) {
  if (state.progress < 0.5) return false;
  return now / state.progress > predicted_finish;
}

inline double late_send_probability(int cluster_size) {
  if (cluster_size < 2) throw DomainError("late notification probability needs a cluster of at least 2");
  return std::min(1.0, 2.0 / static_cast<double>(cluster_size - 1));
}

inline bool should_send_late_notification(const WorkerState& state, int cluster_size, stats::Rng& rng,
                                          bool is_first_detector) {
  (void)state;
  const double p = late_send_probability(cluster_size);
  if (is_first_detector) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

// Unique notifications about (option, origin cluster) held directly or
// through embedding, ordered by sequence then origin.
inline std::vector<NotificationSummary> reconstruct(std::span<const LateNotification> received, int option_index,
                                                    std::optional<ClusterTag> origin = std::nullopt) {
  std::vector<NotificationSummary> out;
  auto add = [&](const NotificationSummary& s) {
    if (s.option_index != option_index) return;
    if (origin && s.origin_cluster != *origin) return;
    const bool seen = std::any_of(out.begin(), out.end(), [&](const NotificationSummary& o) {
      return o.origin_worker == s.origin_worker && o.option_index == s.option_index;
    });
    if (!seen) out.push_back(s);
  };
  for (const auto& n : received) {
    add(n.summary());
    for (const auto& e : n.embedded) add(e);
  }
  std::sort(out.begin(), out.end(), [](const NotificationSummary& a, const NotificationSummary& b) {
    return std::pair(a.sequence, a.origin_worker) < std::pair(b.sequence, b.origin_worker);
  });
  return out;
}

inline LateNotification merge_notifications(LateNotification fresh, std::span<const NotificationSummary> history) {
  fresh.embedded.assign(history.begin(), history.end());
  fresh.sequence = static_cast<int>(history.size()) + 1;
  return fresh;
}

inline LateNotification merge_notifications(LateNotification fresh, std::span<const LateNotification> history) {
  const auto summaries = reconstruct(history, fresh.option_index, fresh.origin_cluster);
  return merge_notifications(std::move(fresh), std::span<const NotificationSummary>(summaries));
}

inline bool cluster_is_late(std::span<const LateNotification> received, int option_index, ClusterTag origin,
                            int threshold = kDefaultLateThreshold) {
  return static_cast<int>(reconstruct(received, option_index, origin).size()) >= std::max(1, threshold);
}

inline bool cluster_is_late(std::span<const LateNotification> received, int option_index,
                            int threshold = kDefaultLateThreshold) {
  return cluster_is_late(received, option_index, ClusterTag::fast, threshold) ||
         cluster_is_late(received, option_index, ClusterTag::slow, threshold);
}

struct ReachedSyncPoint {
  double time = 0.0;
};
struct NotificationArrived {
  double time = 0.0;
  LateNotification notification;
};
struct LocalTaskDone {
  double time = 0.0;
};
struct OptionDeadlinePassed {
  int option = 1;
  double time = 0.0;
};
// Controller verdict on an attempted option, delivered to every worker.
struct SyncOutcome {
  int option = 1;
  bool quorum_met = false;
  double time = 0.0;
};

using Event = std::variant<ReachedSyncPoint, NotificationArrived, LocalTaskDone, OptionDeadlinePassed, SyncOutcome>;

struct ExecuteSync {
  int option = 1;
};
struct ExecuteLocal {
  double duration = 0.0;
};
struct SendNotification {
  LateNotification notification;
};
struct Abort {
  int option = 1;
};
struct ProceedToOption {
  int option = 1;
};

using Action = std::variant<ExecuteSync, ExecuteLocal, SendNotification, Abort, ProceedToOption>;

struct StepResult {
  WorkerState state;
  std::vector<Action> actions;
};

namespace detail {

inline bool base_edge(const Phase& a, const Phase& b) {
  using K = PhaseKind;
  if (a.terminal()) return false;
  if (b.kind == K::aborted) return true;
  const int c = a.option;
  switch (a.kind) {
    case K::before_option:
      return (b.kind == K::at_option && b.option == c) || (b.kind == K::before_option && b.option == c + 1 && c < 3);
    case K::at_option:
      return (b.kind == K::synced && b.option == c) || (b.kind == K::at_option && b.option == c + 1 && c < 3) ||
             (b.kind == K::running_local && b.option == c && c < 3);
    case K::running_local:
      return (b.kind == K::at_option && b.option == c + 1) ||
             (b.kind == K::running_local && b.option == c + 1 && c + 1 < 3);
    default: return false;
  }
}

}  // namespace detail

inline std::vector<Phase> all_phases() {
  std::vector<Phase> out;
  for (int c = 1; c <= 3; ++c) out.push_back({PhaseKind::before_option, c});
  for (int c = 1; c <= 3; ++c) out.push_back({PhaseKind::at_option, c});
  for (int c = 1; c <= 2; ++c) out.push_back({PhaseKind::running_local, c});
  for (int c = 1; c <= 3; ++c) out.push_back({PhaseKind::synced, c});
  for (int c = 1; c <= 3; ++c) out.push_back({PhaseKind::aborted, c});
  return out;
}

inline int phase_index(const Phase& p) {
  const int offsets[] = {0, 3, 6, 8, 11};
  return offsets[static_cast<int>(p.kind)] + p.option - 1;
}

// Transitive closure of the per-worker edges; one step may cascade
// through several skipped options.
inline bool is_algorithm_edge(const Phase& from, const Phase& to) {
  static const auto table = [] {
    const auto phases = all_phases();
    std::vector<std::vector<bool>> t(phases.size(), std::vector<bool>(phases.size(), false));
    for (const Phase& start : phases) {
      std::vector<Phase> frontier{start};
      while (!frontier.empty()) {
        const Phase p = frontier.back();
        frontier.pop_back();
        for (const Phase& q : phases) {
          auto cell = t[static_cast<std::size_t>(phase_index(start))][static_cast<std::size_t>(phase_index(q))];
          if (cell || !detail::base_edge(p, q)) continue;
          cell = true;
          frontier.push_back(q);
        }
      }
    }
    return t;
  }();
  if (from == to) return !from.terminal();
  return table[static_cast<std::size_t>(phase_index(from))][static_cast<std::size_t>(phase_index(to))];
}

namespace detail {

inline void add_notification(WorkerState& s, const LateNotification& n) {
  const bool dup = std::any_of(s.notifications_received.begin(), s.notifications_received.end(),
                               [&](const LateNotification& m) {
                                 return m.origin_worker == n.origin_worker && m.option_index == n.option_index;
                               });
  if (!dup) s.notifications_received.push_back(n);
}

inline void violation(const WorkerState& s, const char* event) {
  throw ProtocolViolationError("worker " + std::to_string(s.id) + " in " + to_string(s.phase) +
                               " cannot accept " + event);
}

inline void abort_at(StepResult& r, int option) {
  r.state.phase = {PhaseKind::aborted, option};
  r.state.attempting = false;
  r.actions.push_back(Abort{option});
}

// Applies the notification branches at the current option until the worker
// is either waiting for a deadline, running a local task, or terminal.
inline void resolve(StepResult& r, const sched::SyncSchedule& sched, const ProtocolParams& pp) {
  WorkerState& s = r.state;
  while (s.phase.kind == PhaseKind::at_option && !s.attempting) {
    const int c = s.phase.option;
    const std::span<const LateNotification> held(s.notifications_received);
    const bool own_late = s.cluster != ClusterTag::outlier && cluster_is_late(held, c, s.cluster, pp.late_threshold);
    bool other_late = false;
    for (ClusterTag t : {ClusterTag::fast, ClusterTag::slow})
      if (t != s.cluster && cluster_is_late(held, c, t, pp.late_threshold)) other_late = true;
    if (!own_late && !other_late) return;
    if (c == 3) {
      abort_at(r, 3);
      return;
    }
    if (other_late && !own_late && s.cluster != ClusterTag::outlier && !s.local_tasks.empty() &&
        s.local_tasks.front() <= sched.t_s(c) - s.t_av) {
      r.actions.push_back(ExecuteLocal{s.local_tasks.front()});
      s.local_tasks.pop_front();
      s.phase = {PhaseKind::running_local, c};
      r.actions.push_back(ProceedToOption{c + 1});
      return;
    }
    s.phase = {PhaseKind::at_option, c + 1};
    r.actions.push_back(ProceedToOption{c + 1});
  }
}

}  // namespace detail

inline StepResult worker_step(WorkerState state, const sched::SyncSchedule& sched, const Event& event,
                              const ProtocolParams& pp = {}) {
  StepResult r{std::move(state), {}};
  WorkerState& s = r.state;
  if (s.phase.terminal()) detail::violation(s, "any event (terminal)");
  const int c = s.phase.option;

  std::visit(
      [&](const auto& ev) {
        using E = std::decay_t<decltype(ev)>;
        if constexpr (std::is_same_v<E, ReachedSyncPoint>) {
          if (s.phase.kind != PhaseKind::before_option || ev.time > sched.t_s(c))
            detail::violation(s, "ReachedSyncPoint");
          s.phase = {PhaseKind::at_option, c};
          s.t_av = ev.time;
          s.progress = 1.0;
          detail::resolve(r, sched, pp);
        } else if constexpr (std::is_same_v<E, NotificationArrived>) {
          detail::add_notification(s, ev.notification);
          detail::resolve(r, sched, pp);
        } else if constexpr (std::is_same_v<E, LocalTaskDone>) {
          if (s.phase.kind != PhaseKind::running_local) detail::violation(s, "LocalTaskDone");
          s.phase = {PhaseKind::at_option, c + 1};
          s.t_av = ev.time;
          detail::resolve(r, sched, pp);
        } else if constexpr (std::is_same_v<E, OptionDeadlinePassed>) {
          const int d = ev.option;
          switch (s.phase.kind) {
            case PhaseKind::before_option:
              if (d < c) detail::violation(s, "OptionDeadlinePassed for an earlier option");
              if (d > c) break;
              if (c == 3) {
                detail::abort_at(r, 3);
              } else {
                s.phase = {PhaseKind::before_option, c + 1};
                r.actions.push_back(ProceedToOption{c + 1});
              }
              break;
            case PhaseKind::at_option:
              if (d != c || s.attempting) break;
              detail::resolve(r, sched, pp);
              if (s.phase == Phase{PhaseKind::at_option, d} && !s.attempting) {
                s.attempting = true;
                r.actions.push_back(ExecuteSync{d});
              }
              break;
            case PhaseKind::running_local:
              if (d > c + 1) detail::violation(s, "OptionDeadlinePassed beyond the running local task");
              if (d <= c) break;
              if (d == 3) {
                detail::abort_at(r, 3);
              } else {
                s.phase = {PhaseKind::running_local, d};
                r.actions.push_back(ProceedToOption{d + 1});
              }
              break;
            default: break;
          }
        } else if constexpr (std::is_same_v<E, SyncOutcome>) {
          if (s.attempting && s.phase == Phase{PhaseKind::at_option, ev.option} && ev.quorum_met) {
            s.phase = {PhaseKind::synced, ev.option};
            s.attempting = false;
          } else {
            detail::abort_at(r, ev.option);
          }
        }
      },
      event);
  return r;
}

}  // namespace fastsync::protocol
