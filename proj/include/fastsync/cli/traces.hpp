#pragma once

// Trace CSV: `worker_id,iteration,runtime_ms`, one row per observation.

#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "fastsync/error.hpp"
#include "fastsync/sim/workers.hpp"

namespace fastsync::cli {

inline constexpr const char* kTraceHeader = "worker_id,iteration,runtime_ms";

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_field(const std::string& s, int row, const char* what) {
  T v{};
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw TraceFormatError(row, std::string("bad ") + what + " '" + s + "'");
  return v;
}

}  // namespace detail

inline sim::TraceSet read_traces(std::istream& in) {
  std::string line;
  int row = 0;
  bool header = false;
  std::map<int, std::map<int, double>> rows;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != kTraceHeader) throw TraceFormatError(row, "expected header '" + std::string(kTraceHeader) + "'");
      header = true;
      continue;
    }
    const auto f = detail::split_csv(line);
    if (f.size() != 3) throw TraceFormatError(row, "expected 3 fields, got " + std::to_string(f.size()));
    const int w = detail::parse_field<int>(f[0], row, "worker_id");
    const int k = detail::parse_field<int>(f[1], row, "iteration");
    const double rt = detail::parse_field<double>(f[2], row, "runtime_ms");
    if (k < 0) throw TraceFormatError(row, "negative iteration");
    if (rt < 0.0) throw ValidationError("trace row " + std::to_string(row) + ": negative runtime " + f[2]);
    if (!rows[w].emplace(k, rt).second) throw TraceFormatError(row, "duplicate observation for worker " + f[0]);
  }
  if (!header || rows.empty()) throw InsufficientDataError("trace input is empty");

  sim::TraceSet t;
  const std::size_t iters = rows.begin()->second.size();
  for (const auto& [w, series] : rows) {
    if (series.size() != iters)
      throw ValidationError("worker " + std::to_string(w) + " has " + std::to_string(series.size()) +
                            " iterations, expected " + std::to_string(iters));
    std::vector<double> v;
    int expect = 0;
    for (const auto& [k, rt] : series) {
      if (k != expect++) throw ValidationError("worker " + std::to_string(w) + " is missing iteration " + std::to_string(expect - 1));
      v.push_back(rt);
    }
    t.worker_ids.push_back(w);
    t.runtimes.push_back(std::move(v));
  }
  return t;
}

inline sim::TraceSet read_traces_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open trace file " + path);
  return read_traces(in);
}

inline void write_traces(std::ostream& out, const sim::TraceSet& t) {
  out << kTraceHeader << '\n';
  char buf[64];
  for (std::size_t w = 0; w < t.workers(); ++w) {
    for (std::size_t k = 0; k < t.runtimes[w].size(); ++k) {
      auto r = std::to_chars(buf, buf + sizeof buf, t.runtimes[w][k]);
      out << t.worker_ids[w] << ',' << k << ',' << std::string(buf, r.ptr) << '\n';
    }
  }
}

}  // namespace fastsync::cli
