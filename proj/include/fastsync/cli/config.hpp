#pragma once

// Experiment configuration: flat `key = value` lines, dotted keys, repeated
// keys for lists, `#` comments.

#include <charconv>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fastsync/error.hpp"
#include "fastsync/sim/config.hpp"

namespace fastsync::cli {

using sim::SimulationConfig;
using sim::SynchronizerSpec;

struct Sweep {
  std::string parameter;
  std::vector<std::string> values;

  friend bool operator==(const Sweep&, const Sweep&) = default;
};

struct ExperimentSpec {
  SimulationConfig base;
  std::optional<Sweep> sweep;
  std::vector<SynchronizerSpec> synchronizers;
  std::string output_dir = "results";
  bool emit_plots = false;
  std::string traces;  // optional trace CSV replacing the generated worker profiles
};

struct Cell {
  std::string name;
  SimulationConfig config;
};

inline std::vector<SynchronizerSpec> default_synchronizers() {
  return {sim::fastsync_spec(), sim::bsp_spec(), sim::ssp_spec(3), sim::ssp_spec(5), sim::dssp_spec(3, 7)};
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& key, int line, const std::string& v) {
  double out = 0.0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key, line, "expected a number, got '" + v + "'");
  return out;
}

inline int parse_int(const std::string& key, int line, const std::string& v) {
  int out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) throw ConfigError(key, line, "expected an integer, got '" + v + "'");
  return out;
}

inline std::uint64_t parse_u64(const std::string& key, int line, const std::string& v) {
  std::uint64_t out = 0;
  auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size())
    throw ConfigError(key, line, "expected a non-negative integer, got '" + v + "'");
  return out;
}

inline bool parse_bool(const std::string& key, int line, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key, line, "expected a boolean, got '" + v + "'");
}

struct Field {
  std::function<void(SimulationConfig&, const std::string&, int)> set;
  std::function<std::string(const SimulationConfig&)> get;
};

inline Field real(double SimulationConfig::*m, const std::string& key) {
  return {[m, key](SimulationConfig& c, const std::string& v, int line) { c.*m = parse_double(key, line, v); },
          [m](const SimulationConfig& c) { return format_double(c.*m); }};
}

inline Field integer(int SimulationConfig::*m, const std::string& key) {
  return {[m, key](SimulationConfig& c, const std::string& v, int line) { c.*m = parse_int(key, line, v); },
          [m](const SimulationConfig& c) { return std::to_string(c.*m); }};
}

inline Field payoff_real(double game::PayoffParameters::*m, const std::string& key) {
  return {[m, key](SimulationConfig& c, const std::string& v, int line) { c.payoff.*m = parse_double(key, line, v); },
          [m](const SimulationConfig& c) { return format_double(c.payoff.*m); }};
}

inline Field payoff_slot(std::array<double, 3> game::PayoffParameters::*m, std::size_t i, const std::string& key) {
  return {[m, i, key](SimulationConfig& c, const std::string& v, int line) { (c.payoff.*m)[i] = parse_double(key, line, v); },
          [m, i](const SimulationConfig& c) { return format_double((c.payoff.*m)[i]); }};
}

// Every scalar simulation key, in serialization order.
inline const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = [] {
    using C = SimulationConfig;
    using P = game::PayoffParameters;
    std::vector<std::pair<std::string, Field>> t;
    auto add = [&](const std::string& k, Field f) { t.emplace_back(k, std::move(f)); };
    add("n_workers", integer(&C::n_workers, "n_workers"));
    add("alpha", real(&C::alpha, "alpha"));
    add("rounds", integer(&C::rounds, "rounds"));
    add("runs", integer(&C::runs, "runs"));
    add("seed", {[](C& c, const std::string& v, int line) { c.seed = parse_u64("seed", line, v); },
                 [](const C& c) { return std::to_string(c.seed); }});
    add("task_profile", {[](C& c, const std::string& v, int line) {
                           if (v == "short") c.task_profile = sim::TaskProfile::short_tasks;
                           else if (v == "long") c.task_profile = sim::TaskProfile::long_tasks;
                           else throw ConfigError("task_profile", line, "expected short or long, got '" + v + "'");
                         },
                         [](const C& c) { return std::string(sim::to_string(c.task_profile)); }});
    add("heterogeneity_spread_ms", real(&C::heterogeneity_spread_ms, "heterogeneity_spread_ms"));
    add("slow_fraction", real(&C::slow_fraction, "slow_fraction"));
    add("slow_factor", real(&C::slow_factor, "slow_factor"));
    add("worker_exec_stddev", real(&C::worker_exec_stddev, "worker_exec_stddev"));
    add("late_probability", real(&C::late_probability, "late_probability"));
    add("late_factor", real(&C::late_factor, "late_factor"));
    add("drift_rate", real(&C::drift_rate, "drift_rate"));
    add("ww_msg.mean", real(&C::ww_mean, "ww_msg.mean"));
    add("ww_msg.stddev", real(&C::ww_stddev, "ww_msg.stddev"));
    add("wc_msg.mean", real(&C::wc_mean, "wc_msg.mean"));
    add("wc_msg.stddev", real(&C::wc_stddev, "wc_msg.stddev"));
    add("local_task.min", real(&C::local_task_min, "local_task.min"));
    add("local_task.max", real(&C::local_task_max, "local_task.max"));
    add("sync_task_ms", real(&C::sync_task_ms, "sync_task_ms"));
    add("clustering_cost", real(&C::clustering_cost, "clustering_cost"));
    add("clustering_frequency", {[](C& c, const std::string& v, int line) {
                                   c.clustering_frequency = v == "fixed" ? 0 : parse_int("clustering_frequency", line, v);
                                 },
                                 [](const C& c) {
                                   return c.clustering_frequency == 0 ? std::string("fixed")
                                                                      : std::to_string(c.clustering_frequency);
                                 }});
    add("clustering_window", integer(&C::clustering_window, "clustering_window"));
    add("partition.drop_probability", real(&C::drop_probability, "partition.drop_probability"));
    add("partition.isolation_probability", real(&C::isolation_probability, "partition.isolation_probability"));
    add("late_threshold", integer(&C::late_threshold, "late_threshold"));
    add("mode", {[](C& c, const std::string& v, int line) {
                   if (v == "literal") c.mode = sched::Mode::literal;
                   else if (v == "corrected") c.mode = sched::Mode::corrected;
                   else throw ConfigError("mode", line, "expected literal or corrected, got '" + v + "'");
                 },
                 [](const C& c) { return std::string(c.mode == sched::Mode::literal ? "literal" : "corrected"); }});
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string idx = std::to_string(i + 1);
      add("payoff.sync_utility." + idx, payoff_slot(&P::sync_utils, i, "payoff.sync_utility." + idx));
    }
    for (std::size_t i = 0; i < 3; ++i) {
      const std::string idx = std::to_string(i + 1);
      add("payoff.abort_cost." + idx, payoff_slot(&P::abort_costs, i, "payoff.abort_cost." + idx));
    }
    add("payoff.wait_rate", payoff_real(&P::wait_rate, "payoff.wait_rate"));
    add("payoff.local_rate", payoff_real(&P::local_rate, "payoff.local_rate"));
    add("payoff.notify_wait_rate", payoff_real(&P::pre_notify_wait_rate, "payoff.notify_wait_rate"));
    add("payoff.sync_players", {[](C& c, const std::string& v, int line) {
                                  c.payoff.sync_players = parse_int("payoff.sync_players", line, v);
                                },
                                [](const C& c) { return std::to_string(c.payoff.sync_players); }});
    add("trace_iterations", integer(&C::trace_iterations, "trace_iterations"));
    return t;
  }();
  return table;
}

inline const Field* find_field(const std::string& key) {
  for (const auto& [k, f] : fields())
    if (k == key) return &f;
  return nullptr;
}

}  // namespace detail

inline SynchronizerSpec parse_synchronizer(const std::string& tok, int line = 0) {
  std::vector<std::string> parts;
  std::stringstream ss(tok);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  const std::string key = "synchronizer";
  if (parts.empty()) throw ConfigError(key, line, "empty value");
  const std::string& kind = parts[0];
  auto arity = [&](std::size_t n) {
    if (parts.size() != n) throw ConfigError(key, line, "bad arity in '" + tok + "'");
  };
  if (kind == "fastsync" || kind == "bsp" || kind == "asp") {
    arity(1);
    return kind == "fastsync" ? sim::fastsync_spec() : kind == "bsp" ? sim::bsp_spec() : sim::asp_spec();
  }
  if (kind == "ssp") {
    arity(2);
    const int s = detail::parse_int(key, line, parts[1]);
    if (s < 0) throw ConfigError(key, line, "staleness must be >= 0");
    return sim::ssp_spec(s);
  }
  if (kind == "dssp") {
    arity(3);
    const int s = detail::parse_int(key, line, parts[1]);
    const int r = detail::parse_int(key, line, parts[2]);
    if (s < 0) throw ConfigError(key, line, "staleness must be >= 0");
    if (s > r) throw ConfigError(key, line, "dssp needs s <= r_max");
    return sim::dssp_spec(s, r);
  }
  throw ConfigError(key, line, "unknown synchronizer '" + tok + "'");
}

inline void set_key(SimulationConfig& cfg, const std::string& key, const std::string& value, int line = 0) {
  const auto* f = detail::find_field(key);
  if (!f) throw ConfigError(key, line, "unknown key");
  f->set(cfg, value, line);
}

inline std::string get_key(const SimulationConfig& cfg, const std::string& key) {
  const auto* f = detail::find_field(key);
  if (!f) throw ConfigError(key, 0, "unknown key");
  return f->get(cfg);
}

inline void validate(const ExperimentSpec& spec) {
  spec.base.validate();
  if (spec.synchronizers.empty()) throw ConfigError("synchronizer", 0, "at least one synchronizer is required");
  if (spec.output_dir.empty()) throw ConfigError("output_dir", 0, "must not be empty");
  if (spec.sweep) {
    if (spec.sweep->values.empty()) throw ConfigError("sweep.value", 0, "sweep needs at least one value");
    if (!detail::find_field(spec.sweep->parameter)) throw ConfigError("sweep.parameter", 0, "unknown parameter '" + spec.sweep->parameter + "'");
    if (!spec.traces.empty() && spec.sweep->parameter == "n_workers")
      throw ConfigError("sweep.parameter", 0, "n_workers is fixed by the trace file");
    for (const auto& v : spec.sweep->values) {
      SimulationConfig c = spec.base;
      set_key(c, spec.sweep->parameter, v);
      try {
        c.validate();
      } catch (const ConfigError& e) {
        throw ConfigError("sweep.value", 0, e.message() + " (" + e.key() + ")");
      }
    }
  }
}

inline ExperimentSpec parse_config(const std::string& text) {
  ExperimentSpec spec;
  std::optional<std::string> sweep_param;
  std::vector<std::string> sweep_values;
  std::vector<int> sweep_lines;
  bool have_sync = false;
  std::map<std::string, int> seen;

  std::stringstream in(text);
  int line_no = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(detail::trim(line), line_no, "expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("", line_no, "missing key");
    const bool repeatable = key == "synchronizer" || key == "sweep.value";
    if (!repeatable) {
      if (auto it = seen.find(key); it != seen.end())
        throw ConfigError(key, line_no, "duplicate key, first set on line " + std::to_string(it->second));
      seen[key] = line_no;
    }
    if (key == "synchronizer") {
      if (!have_sync) spec.synchronizers.clear();
      have_sync = true;
      spec.synchronizers.push_back(parse_synchronizer(value, line_no));
    } else if (key == "sweep.parameter") {
      if (!detail::find_field(value)) throw ConfigError(key, line_no, "unknown parameter '" + value + "'");
      sweep_param = value;
    } else if (key == "sweep.value") {
      sweep_values.push_back(value);
      sweep_lines.push_back(line_no);
    } else if (key == "output_dir") {
      spec.output_dir = value;
    } else if (key == "emit_plots") {
      spec.emit_plots = detail::parse_bool(key, line_no, value);
    } else if (key == "traces") {
      spec.traces = value;
    } else {
      set_key(spec.base, key, value, line_no);
    }
  }
  if (!have_sync) spec.synchronizers = default_synchronizers();
  if (!sweep_values.empty() && !sweep_param) throw ConfigError("sweep.value", sweep_lines.front(), "sweep.parameter is not set");
  if (sweep_param) {
    if (sweep_values.empty()) throw ConfigError("sweep.parameter", seen["sweep.parameter"], "sweep needs at least one sweep.value");
    for (std::size_t i = 0; i < sweep_values.size(); ++i) {
      SimulationConfig c = spec.base;
      set_key(c, *sweep_param, sweep_values[i], sweep_lines[i]);
      try {
        c.validate();
      } catch (const ConfigError& e) {
        throw ConfigError("sweep.value", sweep_lines[i], e.message() + " (" + e.key() + ")");
      }
    }
    spec.sweep = Sweep{*sweep_param, sweep_values};
  }
  // Report range errors against the line that set the key.
  try {
    spec.base.validate();
  } catch (const ConfigError& e) {
    const auto it = seen.find(e.key());
    if (it != seen.end()) throw ConfigError(e.key(), it->second, e.message());
    throw;
  }
  validate(spec);
  return spec;
}

inline std::string serialize(const ExperimentSpec& spec) {
  std::string out;
  for (const auto& [key, f] : detail::fields()) out += key + " = " + f.get(spec.base) + "\n";
  for (const auto& s : spec.synchronizers) out += "synchronizer = " + s.token() + "\n";
  if (spec.sweep) {
    out += "sweep.parameter = " + spec.sweep->parameter + "\n";
    for (const auto& v : spec.sweep->values) out += "sweep.value = " + v + "\n";
  }
  out += "output_dir = " + spec.output_dir + "\n";
  out += std::string("emit_plots = ") + (spec.emit_plots ? "true" : "false") + "\n";
  if (!spec.traces.empty()) out += "traces = " + spec.traces + "\n";
  return out;
}

inline bool same_config(const SimulationConfig& a, const SimulationConfig& b) {
  for (const auto& [key, f] : detail::fields())
    if (f.get(a) != f.get(b)) return false;
  return true;
}

inline bool operator==(const ExperimentSpec& a, const ExperimentSpec& b) {
  return same_config(a.base, b.base) && a.sweep == b.sweep && a.synchronizers == b.synchronizers &&
         a.output_dir == b.output_dir && a.emit_plots == b.emit_plots && a.traces == b.traces;
}

// FASTSYNC_SEED replaces the configured seed when set.
inline void apply_environment(ExperimentSpec& spec) {
  if (const char* v = std::getenv("FASTSYNC_SEED"); v && *v) spec.base.seed = detail::parse_u64("FASTSYNC_SEED", 0, v);
}

inline std::vector<Cell> expand_cells(const ExperimentSpec& spec) {
  if (!spec.sweep) return {{"base", spec.base}};
  std::vector<Cell> cells;
  for (const auto& v : spec.sweep->values) {
    Cell c{spec.sweep->parameter + "=" + v, spec.base};
    set_key(c.config, spec.sweep->parameter, v);
    cells.push_back(std::move(c));
  }
  return cells;
}

}  // namespace fastsync::cli
