#include <iostream>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "dictdescent/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dictionary-restricted greedy descent experiments"};
  app.require_subcommand(1);

  std::string config_path, run_out = ".";
  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--out-dir", run_out, "directory that relative output paths resolve against");

  std::string sweep_dir, sweep_out = ".";
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "run every *.json config in a directory");
  sweep->add_option("dir", sweep_dir, "directory of configs")->required();
  sweep->add_option("--out-dir", sweep_out, "output directory (traces, reports, sweep_summary.csv)");
  sweep->add_option("--jobs,-j", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  std::string trace_path, svg_path;
  auto* plot = app.add_subcommand("plot", "render a trace CSV as SVG");
  plot->add_option("trace", trace_path, "trace CSV")->required();
  plot->add_option("out", svg_path, "output SVG")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) return dictdescent::cmd_run(config_path, run_out, std::cout, std::cerr);
  if (*sweep) return dictdescent::cmd_sweep(sweep_dir, sweep_out, jobs, std::cout, std::cerr);
  return dictdescent::cmd_plot(trace_path, svg_path, std::cout, std::cerr);
}
