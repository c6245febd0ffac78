#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "gevrey/experiment/commands.hpp"

int main(int argc, char** argv) {
  using namespace gevrey::experiment;
  CLI::App app{"Radius-of-analyticity experiments for nonlinear wave equations"};
  app.require_subcommand(1);
  GlobalOptions opts;
  std::string out;
  app.add_option("--out", out, "Output directory (overrides outputs.directory)");
  app.add_flag("--plot-data", opts.plot_data, "Also write gnuplot column files under <out>/plot");
  app.add_flag("--verbose", opts.verbose, "Echo run-log lines to stderr");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run a configured experiment");
  run->add_option("config", config_path, "Config file")->required();
  auto* compare = app.add_subcommand("compare", "Compare the h1 and h2 bounds on one run");
  compare->add_option("config", config_path, "Config file")->required();
  auto* scaling = app.add_subcommand("scaling", "Sweep nu for the sn traveling wave");
  scaling->add_option("config", config_path, "Config file")->required();
  int n = 1;
  double p = 1.0;
  auto* constants = app.add_subcommand("constants", "Print the algebra constants");
  constants->add_option("--n", n, "Spatial dimension")->required();
  constants->add_option("--p", p, "Sobolev order")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  if (!out.empty()) opts.out = out;

  return guarded([&]() -> int {
    if (*constants) return cmd_constants(n, p, opts);
    const RunConfig cfg = load_config(config_path);
    if (*run) return cmd_run(cfg, opts);
    if (*compare) return cmd_compare(cfg, opts);
    return cmd_scaling(cfg, opts);
  });
}
