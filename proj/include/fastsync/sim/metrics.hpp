#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace fastsync::sim {

struct IterationMetrics {
  double runtime_per_sync_point = 0.0;
  double participation = 0.0;
  bool participation_applicable = true;
  std::optional<int> success_option;  // empty means the sync failed
  bool infeasible = false;
  double computation_ms = 0.0;
  double communication_ms = 0.0;
  double communication_inclusive_ms = 0.0;
  double clustering_ms = 0.0;
  int decision_messages = 0;
  int progress_messages = 0;
  int synced_workers = 0;
};

// Names in report order.
inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{
      "runtime_per_sync_point", "participation",    "success_option1",           "success_option2",
      "success_option3",        "failures",         "infeasible_iterations",     "computation_ms",
      "communication_ms",       "communication_inclusive_ms", "clustering_ms", "decision_messages",
      "progress_messages"};
  return names;
}

// Per-run metric values, aligned with metric_names(); NaN means the metric
// has no observation in this run.
inline std::vector<double> summarize_run(const std::vector<IterationMetrics>& its) {
  double n = static_cast<double>(its.size());
  double runtime = 0, part = 0, comp = 0, comm = 0, comm_inc = 0, clus = 0, dec = 0, prog = 0;
  int part_n = 0, failures = 0, infeasible = 0;
  std::array<int, 3> success{0, 0, 0};
  for (const auto& m : its) {
    runtime += m.runtime_per_sync_point;
    comp += m.computation_ms;
    comm += m.communication_ms;
    comm_inc += m.communication_inclusive_ms;
    clus += m.clustering_ms;
    dec += m.decision_messages;
    prog += m.progress_messages;
    if (m.infeasible) ++infeasible;
    if (m.success_option) {
      ++success[static_cast<std::size_t>(*m.success_option - 1)];
      part += m.participation;
      ++part_n;
    } else {
      ++failures;
    }
  }
  const double nan = std::nan("");
  return {runtime / n,         part_n ? part / part_n : nan, double(success[0]), double(success[1]),
          double(success[2]),  double(failures),             double(infeasible), comp / n,
          comm / n,            comm_inc / n,                 clus / n,           dec / n,
          prog / n};
}

struct MetricSummary {
  std::string name;
  double sum = 0.0;
  double sum_sq = 0.0;
  int n = 0;

  double mean() const { return n ? sum / n : std::nan(""); }
  double stddev() const {
    if (n < 2) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, (sum_sq - n * m * m) / (n - 1)));
  }
};

struct MetricsReport {
  std::string synchronizer;
  std::string status = "ok";
  std::vector<MetricSummary> metrics;
  std::vector<std::vector<double>> per_run;  // run-major, aligned with metric_names()

  MetricsReport() {
    for (const auto& name : metric_names()) metrics.push_back({name});
  }

  void add_run(const std::vector<double>& values) {
    per_run.push_back(values);
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (std::isnan(values[i])) continue;
      metrics[i].sum += values[i];
      metrics[i].sum_sq += values[i] * values[i];
      ++metrics[i].n;
    }
  }

  const MetricSummary& get(const std::string& name) const {
    for (const auto& m : metrics)
      if (m.name == name) return m;
    throw std::out_of_range("unknown metric " + name);
  }

  double mean(const std::string& name) const { return get(name).mean(); }

  double run_value(std::size_t run, const std::string& name) const {
    const auto& names = metric_names();
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return per_run.at(run)[i];
    throw std::out_of_range("unknown metric " + name);
  }
};

}  // namespace fastsync::sim
