// One PASS/FAIL line per acceptance criterion; nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fastsync/cli/config.hpp"
#include "fastsync/cli/report.hpp"
#include "fastsync/clustering.hpp"
#include "fastsync/game.hpp"
#include "fastsync/scheduler.hpp"
#include "fastsync/sim/experiment.hpp"
#include "oracles.hpp"

using namespace fastsync;

namespace {

// Tolerances and sizes.
constexpr int kGameTrials = 1000;
constexpr double kGameRuntimeS = 10.0;
constexpr int kScheduleTrials = 1000;
constexpr double kQuorumTol = 1e-9;
constexpr double kScheduleRuntimeS = 30.0;
constexpr int kNotifyTrials = 10000;
constexpr double kNotifyLo = 2.8, kNotifyHi = 3.2;
constexpr double kNotifyRuntimeS = 10.0;
constexpr int kPartitionRuns = 10000;
constexpr double kDrop = 0.5;
constexpr int kSeeds = 30;
constexpr int kOrderingNeeded = 27;
constexpr double kOrderingRuntimeS = 120.0;
constexpr int kMaxDecisionMessages = 8;
constexpr double kParticipationTarget = 0.75, kParticipationTol = 0.1;
constexpr double kDrift = 0.05;
constexpr int kOracleInstances = 200;

struct Line {
  int id;
  bool pass;
  std::string detail;
};

std::vector<Line> lines;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(int id, bool pass, const std::string& detail) {
  lines.push_back({id, pass, detail});
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void game_optimality() {
  using namespace game;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(101);
  int bad_max = 0, bad_dev = 0;
  for (int t = 0; t < kGameTrials; ++t) {
    const auto p = oracle::sample_params(rng);
    const auto all = enumerate_game(p, Scenario::all_on_time());
    const GameOutcome* eq = nullptr;
    for (const auto& o : all)
      if (o.path.size() == 1 && o.path[0] == Profile{Strategy::sync, Strategy::sync}) eq = &o;
    if (!eq || eq->terminal != Terminal{TerminalKind::synced, 1}) {
      ++bad_max;
      continue;
    }
    bool max_ok = true, dev_ok = true;
    for (const auto& o : all) {
      if (o.p > eq->p) max_ok = false;
      if (o.path[0][1] == Strategy::sync && o.v1 > eq->v1) dev_ok = false;
      if (o.path[0][0] == Strategy::sync && o.v2 > eq->v2) dev_ok = false;
    }
    bad_max += !max_ok;
    bad_dev += !dev_ok;
  }
  const double secs = seconds_since(t0);
  report(1, bad_max == 0 && bad_dev == 0 && secs < kGameRuntimeS,
         fmt("%d parameter sets, %d not maximal, %d with a profitable deviation, %.2fs", kGameTrials, bad_max, bad_dev,
             secs));
}

// Exhaustive re-scan of one option's grid: nothing quorum-feasible and
// at or above the previous option beats the chosen t_s.
bool rescan_ok(const oracle::ModelPair& mp, double lower, double chosen,
               const std::function<double(double, double)>& t_of) {
  for (double p1 : sched::percentile_grid())
    for (double p2 : sched::percentile_grid()) {
      if (p1 * mp.fast.size() + p2 * mp.slow.size() < mp.alpha * mp.n - kQuorumTol) continue;
      const double t = t_of(p1, p2);
      if (t >= lower && t < chosen) return false;
    }
  return true;
}

void schedule_correctness() {
  using namespace sched;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(202);
  const game::PayoffParameters params{};
  int errors = 0, not_monotone = 0, quorum = 0, not_optimal = 0, saturated = 0;
  for (int t = 0; t < kScheduleTrials; ++t) {
    const auto mp = oracle::sample_models(rng);
    SyncSchedule s;
    try {
      s = build_schedule(mp.fast, mp.slow, mp.alpha, mp.n, params, Mode::literal);
    } catch (const Error&) {
      ++errors;
      continue;
    }
    if (!(s.t_s(1) <= s.t_s(2) && s.t_s(2) <= s.t_s(3))) ++not_monotone;
    bool q_ok = true;
    for (int c = 1; c <= 3; ++c) {
      const auto& o = s.option(c);
      if (o.saturated) {
        ++saturated;
        continue;
      }
      if (o.percentiles[0] * mp.fast.size() + o.percentiles[1] * mp.slow.size() < mp.alpha * mp.n - kQuorumTol)
        q_ok = false;
    }
    quorum += !q_ok;
    const double x1 = s.option(1).thresholds[0], x2 = s.option(2).thresholds[1];
    bool opt = true;
    if (!s.option(2).saturated)
      opt &= rescan_ok(mp, s.t_s(1), s.t_s(2), [&](double a, double b) {
        return evaluate_second(mp.fast, mp.slow, x1, a, b, params, Mode::literal).t_s();
      });
    if (!s.option(3).saturated)
      opt &= rescan_ok(mp, s.t_s(2), s.t_s(3), [&](double a, double b) {
        return evaluate_third(mp.fast, mp.slow, x1, x2, a, b, params, Mode::literal).t_s();
      });
    not_optimal += !opt;
  }
  const double secs = seconds_since(t0);
  report(2, errors == 0 && not_monotone == 0 && quorum == 0 && not_optimal == 0 && secs < kScheduleRuntimeS,
         fmt("%d model pairs, %d errors, %d not monotone, %d quorum misses, %d not optimal on re-scan, %d saturated "
             "options, %.2fs",
             kScheduleTrials, errors, not_monotone, quorum, not_optimal, saturated, secs));
}

// A whole cluster runs past option 1; counts its option-1 notifications.
void notification_bound() {
  using namespace sim;
  const auto t0 = std::chrono::steady_clock::now();
  sched::SyncSchedule schedule;
  schedule.options[0].t_s = 30;
  schedule.options[1].t_s = 50;
  schedule.options[2].t_s = 70;
  bool ok = true;
  std::string detail;
  for (int n : {4, 10, 50}) {
    Rng net_rng(7 + n), proto_rng(11 + n);
    long total = 0;
    for (int t = 0; t < kNotifyTrials; ++t) {
      IterationSetup s;
      s.schedule = &schedule;
      s.alpha = 0.5;
      s.late_threshold = 1;
      s.net = NetworkModel{};
      s.net.isolated.assign(static_cast<std::size_t>(2 * n), false);
      for (int w = 0; w < 2 * n; ++w) {
        const bool late = w >= n;
        s.tags.push_back(late ? protocol::ClusterTag::slow : protocol::ClusterTag::fast);
        s.pre_sync.push_back(late ? 45.0 : 20.0);
        s.locals.push_back({5.0, 5.0});
      }
      const auto rec = simulate_fastsync_iteration(s, net_rng, proto_rng);
      for (const auto& m : rec.sent)
        if (m.notification.option_index == 1 && m.notification.origin_cluster == protocol::ClusterTag::slow) ++total;
    }
    const double mean = static_cast<double>(total) / kNotifyTrials;
    ok &= mean >= kNotifyLo && mean <= kNotifyHi;
    detail += fmt("N=%d mean %.4f; ", n, mean);
  }
  const double secs = seconds_since(t0);
  report(3, ok && secs < kNotifyRuntimeS,
         detail + fmt("range [%.1f, %.1f], %d trials each, %.2fs", kNotifyLo, kNotifyHi, kNotifyTrials, secs));
}

void partition_tolerance() {
  using namespace sim;
  using namespace protocol;
  const auto t0 = std::chrono::steady_clock::now();
  SimulationConfig cfg;
  cfg.n_workers = 20;
  cfg.late_probability = 0.3;
  cfg.drop_probability = kDrop;
  cfg.late_threshold = 1;
  cfg.rounds = 100;
  const int runs = kPartitionRuns / cfg.rounds;
  int checked = 0, unrecovered = 0, overdue = 0, crashes = 0, with_history = 0;
  for (int run = 0; run < runs; ++run) {
    Rng prng = make_rng(cfg.seed, run, Stream::profile);
    const auto profiles = make_profiles(cfg, prng);
    std::vector<std::vector<double>> h, lh;
    const auto work = draw_workload(cfg, profiles, run, &h, &lh);
    const auto plan = plan_iteration(cfg, h, lh);
    if (!plan.schedule) continue;
    Rng net_rng = make_rng(cfg.seed, run, Stream::network), proto_rng = make_rng(cfg.seed, run, Stream::protocol);
    const double bound = plan.schedule->t_s(3) + max_delay(cfg.network().ww);
    for (int it = 0; it < cfg.rounds; ++it) {
      IterationSetup s;
      s.schedule = &*plan.schedule;
      s.tags = plan.tags;
      s.alpha = cfg.alpha;
      s.late_threshold = cfg.late_threshold;
      s.net = cfg.network();
      for (int w = 0; w < cfg.n_workers; ++w) {
        s.pre_sync.push_back(work.pre_sync[w][it]);
        s.locals.push_back(work.locals[w][it]);
      }
      IterationRecord rec;
      try {
        rec = simulate_fastsync_iteration(s, net_rng, proto_rng);
      } catch (const Error&) {
        ++crashes;
        continue;
      }
      for (const auto& o : rec.workers)
        if (!o.phase.terminal() || o.terminal_time > bound) ++overdue;
      // Every received notification, alone, names all notifications its
      // sender held for that option and cluster, plus itself.
      for (const auto& o : rec.workers)
        for (const auto& m : o.received) {
          const SentRecord* src = nullptr;
          for (const auto& sr : rec.sent)
            if (sr.notification == m) src = &sr;
          if (!src) continue;
          ++checked;
          with_history += !src->sender_history.empty();
          const auto got = reconstruct(std::span<const LateNotification>(&m, 1), m.option_index, m.origin_cluster);
          bool all = std::any_of(got.begin(), got.end(), [&](const NotificationSummary& g) {
            return g.origin_worker == m.origin_worker;
          });
          for (const auto& prev : src->sender_history)
            all &= std::any_of(got.begin(), got.end(), [&](const NotificationSummary& g) {
              return g.origin_worker == prev.origin_worker;
            });
          unrecovered += !all;
        }
    }
  }
  const double secs = seconds_since(t0);
  report(4, checked > 0 && unrecovered == 0 && overdue == 0 && crashes == 0,
         fmt("%d iterations at drop %.2f, %d delivered notifications checked (%d with history), %d incomplete, "
             "%d workers past t3+max delay, %d errors, %.2fs",
             runs * cfg.rounds, kDrop, checked, with_history, unrecovered, overdue, crashes, secs));
}

void comm_ordering() {
  using namespace sim;
  const auto t0 = std::chrono::steady_clock::now();
  SimulationConfig cfg;
  cfg.n_workers = 20;
  cfg.runs = kSeeds;
  const std::vector<SynchronizerSpec> order{fastsync_spec(), dssp_spec(3, 7), ssp_spec(3), ssp_spec(5), bsp_spec()};
  std::vector<MetricsReport> reps;
  for (const auto& s : order) reps.push_back(run_experiment(cfg, s));
  const char* rel[] = {"<", "<", "<=", "<"};
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    int count = 0;
    for (int r = 0; r < kSeeds; ++r) {
      const double a = reps[i].run_value(r, "communication_ms"), b = reps[i + 1].run_value(r, "communication_ms");
      count += i == 2 ? a <= b : a < b;
    }
    ok &= count >= kOrderingNeeded;
    detail += fmt("%s %s %s in %d/%d; ", order[i].name().c_str(), rel[i], order[i + 1].name().c_str(), count, kSeeds);
  }
  detail += "means";
  for (std::size_t i = 0; i < order.size(); ++i) detail += fmt(" %.3f", reps[i].mean("communication_ms"));
  const double secs = seconds_since(t0);
  report(5, ok && secs < kOrderingRuntimeS, detail + fmt(" ms, %.1fs", secs));
}

void scaling() {
  using namespace sim;
  bool ok = true;
  std::string detail;
  for (int n : {5, 20, 100}) {
    SimulationConfig cfg;
    cfg.n_workers = n;
    cfg.rounds = 50;
    int fs_max = 0;
    for (const auto& m : run_once(cfg, fastsync_spec(), 0)) fs_max = std::max(fs_max, m.decision_messages);
    int base_min = INT32_MAX;
    for (const auto& s : {bsp_spec(), ssp_spec(3), ssp_spec(5), dssp_spec(3, 7)})
      for (const auto& m : run_once(cfg, s, 0)) base_min = std::min(base_min, m.decision_messages);
    ok &= fs_max <= kMaxDecisionMessages && base_min >= 2 * n;
    detail += fmt("N=%d FastSync max %d, baselines min %d; ", n, fs_max, base_min);
  }
  report(6, ok, detail + fmt("bounds <= %d and >= 2N", kMaxDecisionMessages));
}

void heterogeneity() {
  using namespace sim;
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  double prev = -INFINITY;
  std::string detail;
  for (double sd : {1.5, 3.0, 6.0}) {
    SimulationConfig cfg;
    cfg.n_workers = 100;
    cfg.runs = kSeeds;
    cfg.worker_exec_stddev = sd;
    const auto rep = run_experiment(cfg, fastsync_spec());
    const double rt = rep.mean("runtime_per_sync_point"), part = rep.mean("participation");
    ok &= rt >= prev && std::abs(part - kParticipationTarget) <= kParticipationTol;
    prev = rt;
    detail += fmt("sd=%.1f runtime %.3f participation %.3f; ", sd, rt, part);
  }
  report(7, ok, detail + fmt("%.1fs", seconds_since(t0)));
}

void clustering_mode() {
  using namespace sim;
  const auto t0 = std::chrono::steady_clock::now();
  SimulationConfig cfg;
  cfg.n_workers = 20;
  cfg.runs = kSeeds;
  cfg.drift_rate = kDrift;
  SimulationConfig fixed = cfg;
  fixed.clustering_frequency = 0;
  cfg.clustering_frequency = 5;
  const auto it = run_experiment(cfg, fastsync_spec());
  const auto fx = run_experiment(fixed, fastsync_spec());
  const double s1i = it.mean("success_option1"), s1f = fx.mean("success_option1");
  const double fi = it.mean("failures"), ff = fx.mean("failures");
  const double ri = it.mean("runtime_per_sync_point"), rf = fx.mean("runtime_per_sync_point");
  report(8, s1i > s1f && fi < ff && rf < ri,
         fmt("drift %.2f: iterative option1 %.2f failures %.2f runtime %.3f; fixed option1 %.2f failures %.2f runtime "
             "%.3f; %.1fs",
             kDrift, s1i, fi, ri, s1f, ff, rf, seconds_since(t0)));
}

void oracle_equivalence() {
  std::mt19937_64 rng(909);
  int db_bad = 0, ari_bad = 0;
  for (int t = 0; t < kOracleInstances; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 30)(rng);
    const int d = std::uniform_int_distribution<int>(1, 3)(rng);
    std::vector<clustering::Point> pts;
    std::uniform_real_distribution<double> u(0, 20);
    for (int i = 0; i < n; ++i) {
      clustering::Point p;
      for (int k = 0; k < d; ++k) p.push_back(u(rng));
      pts.push_back(p);
    }
    const double eps = std::uniform_real_distribution<double>(0.5, 6)(rng);
    const int min_pts = std::uniform_int_distribution<int>(1, 5)(rng);
    db_bad += clustering::dbscan(pts, eps, min_pts).labels != oracle::dbscan(pts, eps, min_pts);
  }
  for (int t = 0; t < kOracleInstances; ++t) {
    const int n = std::uniform_int_distribution<int>(2, 40)(rng);
    std::vector<int> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(std::uniform_int_distribution<int>(-1, 3)(rng));
      b.push_back(std::uniform_int_distribution<int>(-1, 4)(rng));
    }
    ari_bad += std::abs(clustering::adjusted_rand_index(a, b) - oracle::ari(a, b)) > 1e-12;
  }
  const std::vector<int> x{0, 0, 1, 1}, y{0, 1, 0, 1};
  const double hand = clustering::adjusted_rand_index(x, y);
  report(9, db_bad == 0 && ari_bad == 0 && std::abs(hand + 0.5) < 1e-12,
         fmt("DBSCAN %d/%d mismatches, ARI %d/%d mismatches, hand case %.6f", db_bad, kOracleInstances, ari_bad,
             kOracleInstances, hand));
}

void determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "fastsync_acceptance_determinism";
  fs::remove_all(root);
  auto spec = cli::parse_config(
      "n_workers = 12\nrounds = 20\nruns = 4\nseed = 5\nsweep.parameter = wc_msg.mean\nsweep.value = 25\n"
      "sweep.value = 50\nemit_plots = true\n");
  std::vector<std::vector<std::string>> contents;
  std::vector<fs::path> names;
  for (int rep = 0; rep < 2; ++rep) {
    spec.output_dir = (root / ("rep" + std::to_string(rep))).string();
    const auto written = cli::write_outputs(spec, cli::run_spec(spec, rep + 1));
    std::vector<std::string> c;
    for (const auto& p : written) {
      std::ifstream in(p, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      c.push_back(ss.str());
    }
    if (rep == 0)
      for (const auto& p : written) names.push_back(p.filename());
    contents.push_back(c);
  }
  int differ = 0;
  for (std::size_t i = 0; i < contents[0].size(); ++i) differ += contents[0][i] != contents[1].at(i);
  fs::remove_all(root);
  report(10, differ == 0 && contents[0].size() == contents[1].size() && !contents[0].empty(),
         fmt("%zu files compared across two runs (1 and 2 threads), %d differ", contents[0].size(), differ));
}

void analytic() {
  using namespace sim;
  SimulationConfig c;
  c.n_workers = 10;
  c.rounds = 1;
  c.runs = 1;
  c.heterogeneity_spread_ms = 0;
  c.worker_exec_stddev = 0;
  c.late_probability = 0;
  c.ww_stddev = 0;
  c.wc_stddev = 0;
  c.local_task_min = c.local_task_max = 7;
  // clustering, schedule broadcast, slowest task, sync task, two local
  // tasks, final progress report
  const double expect = c.clustering_cost + c.wc_mean + c.task_mean() * c.slow_factor + c.sync_task_ms +
                        2 * c.local_task_min + c.wc_mean;
  const auto rep = run_experiment(c, fastsync_spec(), 1);
  const double got = rep.mean("runtime_per_sync_point");
  report(11, got == expect, fmt("runtime %.9f, closed form %.9f", got, expect));
}

}  // namespace

int main() {
  game_optimality();
  schedule_correctness();
  notification_bound();
  partition_tolerance();
  comm_ordering();
  scaling();
  heterogeneity();
  clustering_mode();
  oracle_equivalence();
  determinism();
  analytic();
  int failed = 0;
  for (const auto& l : lines) failed += !l.pass;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(lines.size()) - failed, lines.size());
  return failed == 0 ? 0 : 1;
}
