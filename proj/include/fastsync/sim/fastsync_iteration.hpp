#pragma once

// One FastSync iteration across all workers, driven by the protocol state
// machine on top of the event queue. Times are relative to the iteration
// reference point at which every worker starts its first task.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <variant>
#include <vector>

#include "fastsync/error.hpp"
#include "fastsync/protocol.hpp"
#include "fastsync/scheduler.hpp"
#include "fastsync/sim/engine.hpp"
#include "fastsync/sim/metrics.hpp"
#include "fastsync/sim/network.hpp"

namespace fastsync::sim {

using protocol::ClusterTag;

struct IterationSetup {
  const sched::SyncSchedule* schedule = nullptr;
  std::vector<ClusterTag> tags;              // per worker
  std::vector<double> pre_sync;              // two async tasks, summed
  std::vector<std::array<double, 2>> locals;  // the two local tasks
  double sync_task_ms = 5.0;
  double alpha = 0.7;
  int late_threshold = 3;
  NetworkModel net;

  int n() const { return static_cast<int>(pre_sync.size()); }
  int cluster_size(ClusterTag t) const {
    return static_cast<int>(std::count(tags.begin(), tags.end(), t));
  }
};

struct SentRecord {
  double time = 0.0;
  protocol::LateNotification notification;
  std::vector<protocol::NotificationSummary> sender_history;
};

struct WorkerOutcome {
  protocol::Phase phase;
  double terminal_time = 0.0;
  double busy_until = 0.0;    // end of the compute segment running at termination
  double finish = 0.0;        // end of all work in this iteration
  double wait_ms = 0.0;       // idle time spent waiting on the sync
  double computation_ms = 0.0;
  int local_tasks_pulled = 0;
  std::vector<protocol::LateNotification> received;
};

struct IterationRecord {
  std::optional<int> success_option;
  int synced = 0;
  std::vector<WorkerOutcome> workers;
  std::vector<SentRecord> sent;
  double last_event_time = 0.0;
  bool events_monotone = true;
};

inline int quorum_count(double alpha, int n) {
  return static_cast<int>(std::ceil(alpha * static_cast<double>(n) - 1e-9));
}

namespace detail {

struct Checkpoint {
  int worker;
  int segment;
};
struct Available {
  int worker;
};
struct LocalDone {
  int worker;
};
struct Delivery {
  int worker;
  protocol::LateNotification notification;
};
struct Deadline {
  int option;
};
struct Evaluate {
  int option;
};

using SimEvent = std::variant<Checkpoint, Available, LocalDone, Delivery, Deadline, Evaluate>;

struct Segment {
  double start = 0.0;
  double duration = 0.0;
  int id = 0;
};

}  // namespace detail

// Runs the protocol for one iteration. net_rng drives message costs and
// losses, proto_rng the notification coins.
inline IterationRecord simulate_fastsync_iteration(const IterationSetup& setup, stats::Rng& net_rng,
                                                   stats::Rng& proto_rng) {
  using namespace protocol;
  const sched::SyncSchedule& sched = *setup.schedule;
  const int n = setup.n();
  const ProtocolParams pp{setup.late_threshold};

  IterationRecord rec;
  rec.workers.resize(static_cast<std::size_t>(n));
  std::vector<WorkerState> st(static_cast<std::size_t>(n));
  std::vector<detail::Segment> seg(static_cast<std::size_t>(n));
  EventQueue<detail::SimEvent> q;

  for (int w = 0; w < n; ++w) {
    auto& s = st[static_cast<std::size_t>(w)];
    s.id = w;
    s.cluster = setup.tags[static_cast<std::size_t>(w)];
    const auto& lt = setup.locals[static_cast<std::size_t>(w)];
    s.local_tasks = {lt[0], lt[1]};
    const double d = setup.pre_sync[static_cast<std::size_t>(w)];
    seg[static_cast<std::size_t>(w)] = {0.0, d, 0};
    q.push(0.5 * d, detail::Checkpoint{w, 0});
    q.push(d, detail::Available{w});
  }
  for (int c = 1; c <= 3; ++c) {
    q.push(sched.t_s(c), detail::Deadline{c});
    q.push(sched.t_s(c), detail::Evaluate{c});
  }

  std::array<std::array<bool, 3>, 3> first_detected{};

  auto target_option = [&](const WorkerState& s) -> int {
    if (s.phase.kind == PhaseKind::before_option) return s.phase.option;
    if (s.phase.kind == PhaseKind::running_local) return s.phase.option + 1;
    return 0;
  };

  // Lateness self-check for the worker's running segment.
  auto check_lateness = [&](int w, double now) {
    auto& s = st[static_cast<std::size_t>(w)];
    const auto& g = seg[static_cast<std::size_t>(w)];
    const int c = target_option(s);
    if (c == 0 || s.cluster == ClusterTag::outlier || s.sent_late[static_cast<std::size_t>(c - 1)]) return;
    const double elapsed = now - g.start;
    s.progress = g.duration > 0.0 ? std::min(1.0, elapsed / g.duration) : 1.0;
    if (!detect_lateness(s, sched.t_s(c) - g.start, elapsed)) return;
    s.sent_late[static_cast<std::size_t>(c - 1)] = true;
    const auto history = reconstruct(s.notifications_received, c, s.cluster);
    // First in simulated time among the cluster's detectors for this option.
    auto& seen = first_detected[static_cast<std::size_t>(s.cluster)][static_cast<std::size_t>(c - 1)];
    const bool first = !seen;
    seen = true;
    const int size = setup.cluster_size(s.cluster);
    const bool send = size < 2 ? true : should_send_late_notification(s, size, proto_rng, first);
    if (!send) return;
    LateNotification fresh{w, s.cluster, c, 1, {}};
    LateNotification msg = merge_notifications(fresh, std::span<const NotificationSummary>(history));
    rec.sent.push_back({now, msg, history});
    s.notifications_received.push_back(msg);
    for (int v = 0; v < n; ++v) {
      if (v == w) continue;
      if (auto at = deliver(setup.net, Edge::worker_worker, now, net_rng, w, v)) q.push(*at, detail::Delivery{v, msg});
    }
  };

  auto start_segment = [&](int w, double now, double duration) {
    auto& g = seg[static_cast<std::size_t>(w)];
    g = {now, duration, g.id + 1};
    q.push(now + 0.5 * duration, detail::Checkpoint{w, g.id});
    q.push(now + duration, detail::LocalDone{w});
  };

  auto mark_terminal = [&](int w, double now) {
    auto& o = rec.workers[static_cast<std::size_t>(w)];
    o.terminal_time = now;
  };

  auto step = [&](int w, const Event& ev, double now) {
    auto& s = st[static_cast<std::size_t>(w)];
    if (s.phase.terminal()) return;
    const Phase before = s.phase;
    StepResult r = worker_step(s, sched, ev, pp);
    if (!is_algorithm_edge(before, r.state.phase) && !(before == r.state.phase))
      throw InternalConsistencyError("transition outside the protocol edge set");
    s = std::move(r.state);
    for (const Action& a : r.actions) {
      if (const auto* loc = std::get_if<ExecuteLocal>(&a)) {
        rec.workers[static_cast<std::size_t>(w)].local_tasks_pulled++;
        start_segment(w, now, loc->duration);
      } else if (std::get_if<ProceedToOption>(&a)) {
        const auto& g = seg[static_cast<std::size_t>(w)];
        const bool computing = g.start + g.duration > now;
        if (computing && now - g.start >= 0.5 * g.duration) check_lateness(w, now);
      }
    }
    if (s.phase.terminal()) mark_terminal(w, now);
  };

  double last = 0.0;
  while (auto e = q.advance()) {
    const double now = e->time;
    if (now < last) rec.events_monotone = false;
    last = now;
    std::visit(
        [&](auto& ev) {
          using E = std::decay_t<decltype(ev)>;
          if constexpr (std::is_same_v<E, detail::Checkpoint>) {
            const auto& s = st[static_cast<std::size_t>(ev.worker)];
            if (s.phase.terminal() || seg[static_cast<std::size_t>(ev.worker)].id != ev.segment) return;
            check_lateness(ev.worker, now);
          } else if constexpr (std::is_same_v<E, detail::Available>) {
            step(ev.worker, ReachedSyncPoint{now}, now);
          } else if constexpr (std::is_same_v<E, detail::LocalDone>) {
            step(ev.worker, LocalTaskDone{now}, now);
          } else if constexpr (std::is_same_v<E, detail::Delivery>) {
            step(ev.worker, NotificationArrived{now, ev.notification}, now);
          } else if constexpr (std::is_same_v<E, detail::Deadline>) {
            for (int w = 0; w < n; ++w) step(w, OptionDeadlinePassed{ev.option, now}, now);
          } else if constexpr (std::is_same_v<E, detail::Evaluate>) {
            int attempts = 0;
            for (const auto& s : st)
              if (s.attempting && s.phase == Phase{PhaseKind::at_option, ev.option}) ++attempts;
            if (attempts == 0) return;
            const bool met = attempts >= quorum_count(setup.alpha, n);
            if (met) {
              rec.success_option = ev.option;
              rec.synced = attempts;
            }
            for (int w = 0; w < n; ++w) step(w, SyncOutcome{ev.option, met, now}, now);
          }
        },
        e->payload);
  }
  rec.last_event_time = last;

  for (int w = 0; w < n; ++w) {
    const auto& s = st[static_cast<std::size_t>(w)];
    auto& o = rec.workers[static_cast<std::size_t>(w)];
    if (!s.phase.terminal()) throw InternalConsistencyError("worker did not terminate by the last option");
    const auto& g = seg[static_cast<std::size_t>(w)];
    o.phase = s.phase;
    o.received = s.notifications_received;
    const double remaining = std::accumulate(s.local_tasks.begin(), s.local_tasks.end(), 0.0);
    const auto& lt = setup.locals[static_cast<std::size_t>(w)];
    o.computation_ms = setup.pre_sync[static_cast<std::size_t>(w)] + lt[0] + lt[1];
    if (s.phase.kind == PhaseKind::synced) {
      const double ts = sched.t_s(s.phase.option);
      o.busy_until = ts + setup.sync_task_ms;
      o.wait_ms = ts - s.t_av;
      o.finish = o.busy_until + remaining;
      o.computation_ms += setup.sync_task_ms;
    } else {
      o.busy_until = std::max(o.terminal_time, g.start + g.duration);
      o.wait_ms = std::max(0.0, o.terminal_time - (g.start + g.duration));
      o.finish = o.busy_until + remaining;
    }
  }
  return rec;
}

}  // namespace fastsync::sim
