#pragma once

// Result emission: one long-format CSV, wide summary tables and optional
// SVG line charts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "fastsync/cli/config.hpp"
#include "fastsync/cli/traces.hpp"
#include "fastsync/sim/experiment.hpp"

namespace fastsync::cli {

inline constexpr const char* kResultsHeader = "cell,synchronizer,metric,mean,stddev,n,status";

struct CellResult {
  std::string cell;
  sim::MetricsReport report;
};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string fixed(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace detail

inline void write_results(std::ostream& out, const std::vector<CellResult>& results) {
  out << kResultsHeader << '\n';
  for (const auto& r : results) {
    for (const auto& m : r.report.metrics) {
      out << detail::csv_field(r.cell) << ',' << detail::csv_field(r.report.synchronizer) << ',' << m.name << ','
          << detail::fixed(m.mean()) << ',' << detail::fixed(m.stddev()) << ',' << m.n << ',' << r.report.status
          << '\n';
    }
  }
}

struct Table {
  std::string name;
  std::string x_label;
  std::string y_label;
  std::vector<std::string> series;
  std::vector<std::string> rows;                // x labels
  std::vector<std::vector<double>> values;      // [row][series]
};

inline void write_table(std::ostream& out, const Table& t) {
  out << detail::csv_field(t.x_label);
  for (const auto& s : t.series) out << ',' << detail::csv_field(s);
  out << '\n';
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out << detail::csv_field(t.rows[i]);
    for (double v : t.values[i]) out << ',' << detail::fixed(v);
    out << '\n';
  }
}

inline std::vector<std::string> cells_in_order(const std::vector<CellResult>& results) {
  std::vector<std::string> cells;
  for (const auto& r : results)
    if (std::find(cells.begin(), cells.end(), r.cell) == cells.end()) cells.push_back(r.cell);
  return cells;
}

inline std::vector<std::string> synchronizers_in_order(const std::vector<CellResult>& results) {
  std::vector<std::string> names;
  for (const auto& r : results)
    if (std::find(names.begin(), names.end(), r.report.synchronizer) == names.end()) names.push_back(r.report.synchronizer);
  return names;
}

inline double lookup(const std::vector<CellResult>& results, const std::string& cell, const std::string& sync,
                     const std::string& metric) {
  for (const auto& r : results)
    if (r.cell == cell && r.report.synchronizer == sync) return r.report.mean(metric);
  return std::nan("");
}

inline std::vector<Table> summary_tables(const std::vector<CellResult>& results, const std::string& x_label) {
  const auto cells = cells_in_order(results);
  const auto syncs = synchronizers_in_order(results);
  std::vector<Table> out;
  auto per_sync = [&](const std::string& metric, const std::string& y) {
    Table t{metric, x_label, y, syncs, cells, {}};
    for (const auto& c : cells) {
      std::vector<double> row;
      for (const auto& s : syncs) row.push_back(lookup(results, c, s, metric));
      t.values.push_back(row);
    }
    out.push_back(std::move(t));
  };
  per_sync("runtime_per_sync_point", "runtime per sync point (ms)");
  per_sync("participation", "sync participation");
  per_sync("communication_ms", "communication overhead (ms)");
  per_sync("communication_inclusive_ms", "communication incl. reports (ms)");
  per_sync("decision_messages", "sync-decision messages per iteration");
  for (const auto& s : syncs) {
    if (s != "FastSync") continue;
    Table t{"outcomes", x_label, "iterations per run", {"success_option1", "success_option2", "success_option3", "failures"},
            cells, {}};
    for (const auto& c : cells) {
      std::vector<double> row;
      for (const auto& m : t.series) row.push_back(lookup(results, c, s, m));
      t.values.push_back(row);
    }
    out.push_back(std::move(t));
  }
  return out;
}

// Minimal static line chart.
inline std::string render_svg(const Table& t) {
  const double w = 640, h = 400, left = 70, right = 170, top = 30, bottom = 60;
  const double pw = w - left - right, ph = h - top - bottom;
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& row : t.values)
    for (double v : row)
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi - lo < 1e-12) lo -= 1, hi += 1;
  const std::size_t nx = t.rows.size();
  auto xpos = [&](std::size_t i) { return left + (nx > 1 ? pw * static_cast<double>(i) / static_cast<double>(nx - 1) : pw / 2); };
  auto ypos = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

  std::ostringstream s;
  char buf[256];
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"18\" font-size=\"13\">%s</text>\n", left, t.name.c_str());
  s << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", left, top + ph, left + pw, top + ph);
  s << buf;
  std::snprintf(buf, sizeof buf, "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"black\"/>\n", left, top, left, top + ph);
  s << buf;
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%.4g</text>\n", left - 6, ypos(v) + 4, v);
    s << buf;
  }
  for (std::size_t i = 0; i < nx; ++i) {
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n", xpos(i), top + ph + 16,
                  t.rows[i].c_str());
    s << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%s</text>\n", left + pw / 2, h - 12,
                t.x_label.c_str());
  s << buf;
  std::snprintf(buf, sizeof buf, "<text x=\"14\" y=\"%g\" transform=\"rotate(-90 14 %g)\" text-anchor=\"middle\">%s</text>\n",
                top + ph / 2, top + ph / 2, t.y_label.c_str());
  s << buf;
  for (std::size_t j = 0; j < t.series.size(); ++j) {
    const char* color = colors[j % 7];
    std::string pts;
    for (std::size_t i = 0; i < nx; ++i) {
      const double v = t.values[i][j];
      if (!std::isfinite(v)) continue;
      std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", pts.empty() ? "" : " ", xpos(i), ypos(v));
      pts += buf;
    }
    if (!pts.empty()) s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" fill=\"%s\">%s</text>\n", left + pw + 12,
                  top + 14.0 * static_cast<double>(j + 1), color, t.series[j].c_str());
    s << buf;
  }
  s << "</svg>\n";
  return s.str();
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::filesystem::filesystem_error("cannot write", path, std::make_error_code(std::errc::permission_denied));
  out << content;
  out.flush();
  if (!out) throw std::filesystem::filesystem_error("write failed", path, std::make_error_code(std::errc::io_error));
}

}  // namespace detail

// Runs every cell against every synchronizer; returns results in order.
inline std::vector<CellResult> run_spec(const ExperimentSpec& spec, int threads = 0, std::ostream* log = nullptr) {
  std::optional<std::vector<sim::WorkerProfile>> profiles;
  std::optional<int> trace_workers;
  if (!spec.traces.empty()) {
    const auto traces = read_traces_file(spec.traces);
    profiles = sim::profiles_from_traces(traces);
    trace_workers = static_cast<int>(traces.workers());
  }
  std::vector<CellResult> out;
  for (auto cell : expand_cells(spec)) {
    if (trace_workers) cell.config.n_workers = *trace_workers;
    for (const auto& s : spec.synchronizers) {
      if (log) *log << "  " << cell.name << " / " << s.name() << "\n" << std::flush;
      out.push_back({cell.name, sim::run_experiment(cell.config, s, threads, profiles ? &*profiles : nullptr)});
    }
  }
  return out;
}

// Writes results.csv, one summary CSV per table and, when asked, one SVG per
// table. Returns the paths written.
inline std::vector<std::filesystem::path> write_outputs(const ExperimentSpec& spec, const std::vector<CellResult>& results) {
  namespace fs = std::filesystem;
  const fs::path dir(spec.output_dir);
  fs::create_directories(dir);
  std::vector<fs::path> written;
  std::ostringstream csv;
  write_results(csv, results);
  detail::write_file(dir / "results.csv", csv.str());
  written.push_back(dir / "results.csv");
  const std::string x_label = spec.sweep ? spec.sweep->parameter : "cell";
  for (const auto& t : summary_tables(results, x_label)) {
    std::ostringstream s;
    write_table(s, t);
    detail::write_file(dir / ("summary_" + t.name + ".csv"), s.str());
    written.push_back(dir / ("summary_" + t.name + ".csv"));
    if (spec.emit_plots) {
      detail::write_file(dir / ("summary_" + t.name + ".svg"), render_svg(t));
      written.push_back(dir / ("summary_" + t.name + ".svg"));
    }
  }
  return written;
}

}  // namespace fastsync::cli
