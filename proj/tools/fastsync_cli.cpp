#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "fastsync/cli/cluster_report.hpp"
#include "fastsync/cli/config.hpp"
#include "fastsync/cli/report.hpp"
#include "fastsync/cli/traces.hpp"
#include "fastsync/sim/workers.hpp"

namespace {

using namespace fastsync;

cli::ExperimentSpec load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto spec = cli::parse_config(ss.str());
  cli::apply_environment(spec);
  return spec;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FastSync synchronization simulator"};
  app.require_subcommand(1);

  std::string config_path, out_path, trace_path;
  int threads = 0, window = 10, step = 5;

  auto* run = app.add_subcommand("run", "run every sweep cell against every synchronizer");
  run->add_option("config", config_path, "config file")->required();
  run->add_option("--threads", threads, "worker threads (0 = hardware)");

  auto* validate = app.add_subcommand("validate", "parse and validate a config, print it normalized");
  validate->add_option("config", config_path, "config file")->required();

  auto* gen = app.add_subcommand("gen-traces", "write synthetic traces for a config");
  gen->add_option("config", config_path, "config file")->required();
  gen->add_option("out", out_path, "output CSV")->required();

  auto* report = app.add_subcommand("cluster-report", "ARI and inter/intra distances over a trace");
  report->add_option("traces", trace_path, "trace CSV")->required();
  report->add_option("--window", window, "iterations per clustering window");
  report->add_option("--step", step, "iterations between clustering points");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const auto spec = load(config_path);
      std::cerr << "running " << cli::expand_cells(spec).size() << " cell(s) x " << spec.synchronizers.size()
                << " synchronizer(s)\n";
      const auto results = cli::run_spec(spec, threads, &std::cerr);
      for (const auto& p : cli::write_outputs(spec, results)) std::cout << p.string() << "\n";
      for (const auto& r : results)
        if (r.report.status != "ok") std::cerr << r.cell << " / " << r.report.synchronizer << ": " << r.report.status << "\n";
    } else if (*validate) {
      const auto spec = load(config_path);
      std::cout << cli::serialize(spec);
    } else if (*gen) {
      const auto spec = load(config_path);
      auto rng = sim::make_rng(spec.base.seed, 0, sim::Stream::profile);
      const auto traces = sim::generate_traces(spec.base, rng);
      std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
      if (!out) throw std::filesystem::filesystem_error("cannot write", out_path, std::make_error_code(std::errc::permission_denied));
      cli::write_traces(out, traces);
      std::cout << out_path << ": " << traces.workers() << " workers x " << traces.iterations() << " iterations\n";
    } else if (*report) {
      const auto traces = cli::read_traces_file(trace_path);
      cli::write_cluster_report(std::cout, cli::cluster_report(traces, window, step));
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
