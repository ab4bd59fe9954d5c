// ietlab: analysis, simulation and averaging for planar event-triggered loops.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ietlab/commands.hpp"
#include "ietlab/config.hpp"
#include "ietlab/error.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kNumericFailure = 3;
constexpr int kHorizonExceeded = 4;

int exit_code(ietlab::ErrorKind kind) {
  switch (kind) {
    case ietlab::ErrorKind::Config:
    case ietlab::ErrorKind::RuleMismatch:
      return kConfigError;
    case ietlab::ErrorKind::HorizonExceeded:
      return kHorizonExceeded;
    default:
      return kNumericFailure;
  }
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::size_t> grid;
  std::optional<std::size_t> events;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& opt, bool out_required) {
  cmd->add_option("--config", opt.config, "run configuration file")->required();
  auto* out = cmd->add_option("--out", opt.out, "output directory");
  if (out_required) out->required();
  cmd->add_option("--grid", opt.grid, "theta grid size");
  cmd->add_option("--events", opt.events, "events per simulated trace");
  cmd->add_option("--seed", opt.seed, "seed for drawn initial states and sampling");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inter-event-time analysis of planar event-triggered control loops"};
  app.require_subcommand(1);
  Options opt;
  auto* analyze = app.add_subcommand("analyze", "tau_s, det M, det L, angle map, fixed points and verdict");
  auto* simulate = app.add_subcommand("simulate", "event traces, phase portrait and IET evolution");
  auto* sweep = app.add_subcommand("avg-sweep", "Birkhoff averages of the IET and the rotation number");
  auto* check = app.add_subcommand("check", "definiteness assumption, periodic triggering, necessary conditions");
  add_common(analyze, opt, true);
  add_common(simulate, opt, true);
  add_common(sweep, opt, true);
  add_common(check, opt, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  ietlab::RunConfig cfg;
  try {
    cfg = ietlab::load_config(opt.config);
    if (opt.grid) cfg.analysis.grid = *opt.grid;
    if (opt.events) cfg.analysis.events = *opt.events;
    if (opt.seed) cfg.analysis.seed = *opt.seed;
  } catch (const ietlab::Error& e) {
    std::cerr << "ietlab: " << e.what() << "\n";
    return kConfigError;
  }

  try {
    if (*analyze) {
      ietlab::cmd_analyze(cfg, opt.out);
    } else if (*simulate) {
      ietlab::cmd_simulate(cfg, opt.out);
    } else if (*sweep) {
      if (!ietlab::cmd_avg_sweep(cfg, opt.out)) {
        std::cerr << "ietlab: HorizonExceeded: some orbits stopped early; see tau_avg.csv\n";
        return kHorizonExceeded;
      }
    } else if (*check) {
      std::cout << ietlab::cmd_check(cfg, opt.out);
    }
  } catch (const ietlab::Error& e) {
    std::cerr << "ietlab: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "ietlab: " << e.what() << "\n";
    return kNumericFailure;
  }
  return kOk;
}
