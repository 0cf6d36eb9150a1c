#include <gtest/gtest.h>

#include <random>

#include "fastsync/error.hpp"
#include "fastsync/protocol.hpp"

using namespace fastsync;
using namespace fastsync::protocol;

namespace {

sched::SyncSchedule schedule(double t1 = 30, double t2 = 50, double t3 = 70) {
  sched::SyncSchedule s;
  s.options[0].t_s = t1;
  s.options[1].t_s = t2;
  s.options[2].t_s = t3;
  s.alpha = 0.7;
  s.n_total = 10;
  return s;
}

LateNotification note(int worker, ClusterTag cluster, int option, int seq = 1) {
  LateNotification n;
  n.origin_worker = worker;
  n.origin_cluster = cluster;
  n.option_index = option;
  n.sequence = seq;
  return n;
}

WorkerState worker(ClusterTag cluster, Phase phase) {
  WorkerState s;
  s.id = 3;
  s.cluster = cluster;
  s.phase = phase;
  return s;
}

template <class A>
bool has(const StepResult& r) {
  for (const auto& a : r.actions)
    if (std::holds_alternative<A>(a)) return true;
  return false;
}

}  // namespace

TEST(Lateness, HalfwayCheckpoint) {
  WorkerState s;
  s.progress = 0.4;
  EXPECT_FALSE(detect_lateness(s, 10.0, 100.0));
  s.progress = 0.5;
  EXPECT_TRUE(detect_lateness(s, 35.0, 20.0));
  EXPECT_FALSE(detect_lateness(s, 45.0, 20.0));
  EXPECT_FALSE(detect_lateness(s, 40.0, 20.0));
}

TEST(Lateness, SendProbability) {
  EXPECT_EQ(late_send_probability(2), 1.0);
  EXPECT_EQ(late_send_probability(3), 1.0);
  EXPECT_DOUBLE_EQ(late_send_probability(5), 0.5);
  EXPECT_DOUBLE_EQ(late_send_probability(11), 0.2);
  EXPECT_THROW(late_send_probability(1), DomainError);
  EXPECT_THROW(late_send_probability(0), DomainError);
}

TEST(Lateness, FirstDetectorAlwaysSends) {
  stats::Rng rng(1);
  WorkerState s;
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(should_send_late_notification(s, 50, rng, true));
}

TEST(Lateness, ExpectedSendsNearThree) {
  stats::Rng rng(4);
  WorkerState s;
  for (int m : {3, 10, 40}) {
    const int trials = 4000;
    long total = 0;
    for (int t = 0; t < trials; ++t) {
      total += should_send_late_notification(s, m, rng, true);
      for (int k = 1; k < m; ++k) total += should_send_late_notification(s, m, rng, false);
    }
    const double mean = static_cast<double>(total) / trials;
    const double expect = 1.0 + (m - 1) * late_send_probability(m);
    EXPECT_NEAR(mean, expect, 0.1) << m;
    EXPECT_LE(expect, 3.0 + 1e-12);
  }
}

TEST(Reconstruct, EmbeddedHistoryRecoversDroppedNotification) {
  const auto a = note(1, ClusterTag::slow, 1, 1);
  auto b = merge_notifications(note(2, ClusterTag::slow, 1), std::span<const LateNotification>(&a, 1));
  EXPECT_EQ(b.sequence, 2);
  ASSERT_EQ(b.embedded.size(), 1u);
  EXPECT_EQ(b.embedded[0], a.summary());
  // a is lost; b alone still names both senders.
  const std::vector<LateNotification> held{b};
  const auto r = reconstruct(held, 1);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].origin_worker, 1);
  EXPECT_EQ(r[1].origin_worker, 2);
  EXPECT_TRUE(cluster_is_late(held, 1, ClusterTag::slow, 2));
  EXPECT_FALSE(cluster_is_late(held, 1, ClusterTag::slow, 3));
  EXPECT_FALSE(cluster_is_late(held, 1, ClusterTag::fast, 1));
}

TEST(Reconstruct, FiltersByOptionAndDeduplicates) {
  const auto a = note(1, ClusterTag::fast, 1);
  auto b = note(2, ClusterTag::fast, 1, 2);
  b.embedded.push_back(a.summary());
  const std::vector<LateNotification> held{a, b, a, note(5, ClusterTag::fast, 2)};
  EXPECT_EQ(reconstruct(held, 1).size(), 2u);
  EXPECT_EQ(reconstruct(held, 2).size(), 1u);
  EXPECT_TRUE(reconstruct(held, 3).empty());
  EXPECT_TRUE(reconstruct(held, 1, ClusterTag::slow).empty());
}

TEST(Reconstruct, MergeOnlyEmbedsSameOptionAndCluster) {
  const std::vector<LateNotification> history{note(1, ClusterTag::fast, 1), note(2, ClusterTag::slow, 1),
                                              note(3, ClusterTag::fast, 2)};
  const auto m = merge_notifications(note(4, ClusterTag::fast, 1), std::span<const LateNotification>(history));
  ASSERT_EQ(m.embedded.size(), 1u);
  EXPECT_EQ(m.embedded[0].origin_worker, 1);
  EXPECT_EQ(m.sequence, 2);
}

TEST(Step, ReachThenDeadlineAttemptsSync) {
  const auto sched = schedule();
  auto r = worker_step(worker(ClusterTag::fast, {PhaseKind::before_option, 1}), sched, ReachedSyncPoint{20});
  EXPECT_EQ(r.state.phase, (Phase{PhaseKind::at_option, 1}));
  EXPECT_EQ(r.state.t_av, 20);
  EXPECT_TRUE(r.actions.empty());
  r = worker_step(r.state, sched, OptionDeadlinePassed{1, 30});
  EXPECT_TRUE(has<ExecuteSync>(r));
  EXPECT_TRUE(r.state.attempting);
  const auto ok = worker_step(r.state, sched, SyncOutcome{1, true, 30});
  EXPECT_EQ(ok.state.phase, (Phase{PhaseKind::synced, 1}));
  const auto bad = worker_step(r.state, sched, SyncOutcome{1, false, 30});
  EXPECT_EQ(bad.state.phase, (Phase{PhaseKind::aborted, 1}));
  EXPECT_TRUE(has<Abort>(bad));
}

TEST(Step, ReachingAfterDeadlineIsViolation) {
  EXPECT_THROW(worker_step(worker(ClusterTag::fast, {PhaseKind::before_option, 1}), schedule(), ReachedSyncPoint{31}),
               ProtocolViolationError);
}

TEST(Step, MissedDeadlineMovesToNextOption) {
  const auto r = worker_step(worker(ClusterTag::slow, {PhaseKind::before_option, 1}), schedule(),
                             OptionDeadlinePassed{1, 30});
  EXPECT_EQ(r.state.phase, (Phase{PhaseKind::before_option, 2}));
  EXPECT_TRUE(has<ProceedToOption>(r));
  const auto last = worker_step(worker(ClusterTag::slow, {PhaseKind::before_option, 3}), schedule(),
                                OptionDeadlinePassed{3, 70});
  EXPECT_EQ(last.state.phase.kind, PhaseKind::aborted);
}

TEST(Step, OtherClusterLateRunsLocalTask) {
  auto s = worker(ClusterTag::fast, {PhaseKind::at_option, 1});
  s.t_av = 20;
  s.local_tasks = {8.0};
  const auto r = worker_step(s, schedule(), NotificationArrived{21, note(9, ClusterTag::slow, 1)});
  EXPECT_EQ(r.state.phase, (Phase{PhaseKind::running_local, 1}));
  EXPECT_TRUE(has<ExecuteLocal>(r));
  EXPECT_TRUE(r.state.local_tasks.empty());
  const auto done = worker_step(r.state, schedule(), LocalTaskDone{29});
  EXPECT_EQ(done.state.phase, (Phase{PhaseKind::at_option, 2}));
}

TEST(Step, LocalTaskTooLongSkipsAhead) {
  auto s = worker(ClusterTag::fast, {PhaseKind::at_option, 1});
  s.t_av = 25;
  s.local_tasks = {8.0};
  const auto r = worker_step(s, schedule(), NotificationArrived{26, note(9, ClusterTag::slow, 1)});
  EXPECT_EQ(r.state.phase, (Phase{PhaseKind::at_option, 2}));
  EXPECT_FALSE(has<ExecuteLocal>(r));
}

TEST(Step, OwnClusterLateSkipsWithoutLocal) {
  auto s = worker(ClusterTag::slow, {PhaseKind::at_option, 1});
  s.t_av = 10;
  s.local_tasks = {5.0};
  const auto r = worker_step(s, schedule(), NotificationArrived{11, note(9, ClusterTag::slow, 1)});
  EXPECT_EQ(r.state.phase, (Phase{PhaseKind::at_option, 2}));
  EXPECT_EQ(r.state.local_tasks.size(), 1u);
}

TEST(Step, LateAtThirdOptionAborts) {
  auto s = worker(ClusterTag::fast, {PhaseKind::at_option, 3});
  const auto r = worker_step(s, schedule(), NotificationArrived{60, note(9, ClusterTag::slow, 3)});
  EXPECT_EQ(r.state.phase, (Phase{PhaseKind::aborted, 3}));
}

TEST(Step, PendingNotificationAppliesOnArrival) {
  auto s = worker(ClusterTag::fast, {PhaseKind::before_option, 1});
  auto r = worker_step(s, schedule(), NotificationArrived{5, note(9, ClusterTag::fast, 1)});
  EXPECT_EQ(r.state.phase, (Phase{PhaseKind::before_option, 1}));
  r = worker_step(r.state, schedule(), ReachedSyncPoint{12});
  EXPECT_EQ(r.state.phase, (Phase{PhaseKind::at_option, 2}));
}

TEST(Step, TerminalRejectsEverything) {
  for (auto kind : {PhaseKind::synced, PhaseKind::aborted})
    for (int c = 1; c <= 3; ++c)
      EXPECT_THROW(worker_step(worker(ClusterTag::fast, {kind, c}), schedule(), OptionDeadlinePassed{c, 70}),
                   ProtocolViolationError);
}

TEST(Edges, TableShape) {
  EXPECT_EQ(all_phases().size(), 14u);
  EXPECT_TRUE(is_algorithm_edge({PhaseKind::before_option, 1}, {PhaseKind::at_option, 1}));
  EXPECT_TRUE(is_algorithm_edge({PhaseKind::at_option, 1}, {PhaseKind::at_option, 3}));
  EXPECT_TRUE(is_algorithm_edge({PhaseKind::at_option, 2}, {PhaseKind::synced, 2}));
  EXPECT_FALSE(is_algorithm_edge({PhaseKind::at_option, 2}, {PhaseKind::synced, 1}));
  EXPECT_FALSE(is_algorithm_edge({PhaseKind::at_option, 2}, {PhaseKind::before_option, 1}));
  EXPECT_FALSE(is_algorithm_edge({PhaseKind::synced, 1}, {PhaseKind::at_option, 2}));
  EXPECT_FALSE(is_algorithm_edge({PhaseKind::running_local, 1}, {PhaseKind::synced, 1}));
}

// Every phase crossed with every event kind: either a violation or a
// transition along an allowed edge.
TEST(Edges, ExhaustiveWalk) {
  const auto sched = schedule();
  std::vector<Event> events;
  events.push_back(ReachedSyncPoint{10});
  events.push_back(LocalTaskDone{40});
  for (int c = 1; c <= 3; ++c)
    for (ClusterTag t : {ClusterTag::fast, ClusterTag::slow}) events.push_back(NotificationArrived{5, note(9, t, c)});
  for (int d = 1; d <= 3; ++d) events.push_back(OptionDeadlinePassed{d, sched.t_s(d)});
  for (int d = 1; d <= 3; ++d)
    for (bool met : {true, false}) events.push_back(SyncOutcome{d, met, sched.t_s(d)});
  int transitions = 0;
  for (const Phase& p : all_phases())
    for (ClusterTag tag : {ClusterTag::fast, ClusterTag::slow, ClusterTag::outlier})
      for (bool attempting : {false, true}) {
        if (attempting && p.kind != PhaseKind::at_option) continue;
        for (const auto& ev : events) {
          auto s = worker(tag, p);
          s.attempting = attempting;
          s.t_av = 10;
          s.local_tasks = {3.0, 4.0};
          try {
            const auto r = worker_step(s, sched, ev);
            EXPECT_FALSE(p.terminal());
            EXPECT_TRUE(is_algorithm_edge(p, r.state.phase)) << to_string(p) << " -> " << to_string(r.state.phase);
            ++transitions;
          } catch (const ProtocolViolationError&) {
          }
        }
      }
  EXPECT_GT(transitions, 200);
}

TEST(Termination, RandomEventsThenDeadlines) {
  const auto sched = schedule();
  std::mt19937_64 rng(12);
  for (int t = 0; t < 2000; ++t) {
    auto s = worker(static_cast<ClusterTag>(rng() % 3), {PhaseKind::before_option, 1});
    s.local_tasks = {static_cast<double>(rng() % 20), static_cast<double>(rng() % 20)};
    auto apply = [&](const Event& e) {
      if (s.phase.terminal()) return;
      try {
        s = worker_step(s, sched, e).state;
      } catch (const ProtocolViolationError&) {
      }
    };
    const int n_events = static_cast<int>(rng() % 6);
    for (int k = 0; k < n_events; ++k) {
      const int c = 1 + static_cast<int>(rng() % 3);
      switch (rng() % 3) {
        case 0: apply(ReachedSyncPoint{static_cast<double>(rng() % 30)}); break;
        case 1: apply(NotificationArrived{1, note(100 + k, static_cast<ClusterTag>(rng() % 2), c)}); break;
        default: apply(LocalTaskDone{5}); break;
      }
    }
    for (int d = 1; d <= 3 && !s.phase.terminal(); ++d) {
      if (s.phase.kind == PhaseKind::running_local && s.phase.option < d - 1) apply(LocalTaskDone{sched.t_s(d)});
      apply(OptionDeadlinePassed{d, sched.t_s(d)});
      if (s.attempting) apply(SyncOutcome{d, rng() % 2 == 0, sched.t_s(d)});
    }
    EXPECT_TRUE(s.phase.terminal()) << to_string(s.phase);
  }
}
