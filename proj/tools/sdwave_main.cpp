#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "sdwave/cli/commands.hpp"

namespace {

struct Flags {
  std::string config;
  std::string output_dir = ".";
  std::string input;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("--config", f.config, "Run configuration (JSON)")->required();
  sub->add_option("--output-dir", f.output_dir, "Directory for CSV/JSON outputs");
  sub->add_option("--seed", f.seed, "Overrides every seed in the configuration");
  sub->add_flag("--quiet", f.quiet, "Suppress progress output");
}

}  // namespace

int main(int argc, char** argv) {
  using namespace sdwave::cli;

  CLI::App app{"Spectral Galerkin simulator for the strongly damped wave equation with logarithmic source"};
  app.require_subcommand(1);
  Flags flags;

  auto* run = app.add_subcommand("run", "Stable-set check, integration and the full verification suite");
  auto* well = app.add_subcommand("welldepth", "Trial-family upper estimate of the potential well depth");
  auto* conv = app.add_subcommand("converge", "Galerkin self-convergence over modes_per_dim levels");
  auto* dep = app.add_subcommand("depend", "Continuous dependence on the initial data");
  auto* ver = app.add_subcommand("verify", "Re-run trajectory checks on an existing CSV");
  for (auto* s : {run, well, conv, dep, ver}) add_common(s, flags);
  ver->add_option("--input", flags.input, "Trajectory CSV (default: <output-dir>/<outputs.csv_path>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    auto cfg = load_config(flags.config);
    if (flags.seed) cfg.override_seed(*flags.seed);
    CommandOptions opts;
    opts.output_dir = flags.output_dir;
    opts.input = flags.input;
    opts.quiet = flags.quiet;

    if (run->parsed()) return cmd_run(cfg, opts);
    if (well->parsed()) return cmd_welldepth(cfg, opts);
    if (conv->parsed()) return cmd_converge(cfg, opts);
    if (dep->parsed()) return cmd_depend(cfg, opts);
    if (ver->parsed()) return cmd_verify(cfg, opts);
  } catch (const sdwave::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
