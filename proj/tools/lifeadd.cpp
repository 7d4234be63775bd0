// lifeadd: solve, simulate, validate, gap-sweep, compare, scenario.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lifeadd/commands.hpp"

namespace {

using namespace lifeadd;

void write_out(const std::string& path, const std::string& bytes) {
  if (path.empty() || path == "-") {
    std::cout << bytes << std::flush;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open '" + path + "' for writing");
  f << bytes;
}

std::optional<SimMode> parse_mode(const std::string& s) {
  if (s.empty()) return std::nullopt;
  if (s == "renewal") return SimMode::Renewal;
  if (s == "realistic") return SimMode::Realistic;
  throw InvalidArgument("unknown mode '" + s + "' (renewal or realistic)");
}

int exit_code_for(const std::string& code) {
  return code == "ValidationError" || code == "ParseError" ? cli::kExitValidation : cli::kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifetime-adjustable sleep-wake WiFi MAC: rate solver and simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kSoftwareVersion));

  std::string scenario_path, out_path, trace_path, format = "csv", mode;
  std::uint64_t seed = 1, cycles = 1000000;
  std::size_t replications = 1;
  unsigned threads = 0;

  auto* solve = app.add_subcommand("solve", "Assign sleep rates and predict per-device performance");
  solve->add_option("--scenario", scenario_path, "Scenario file")->required();
  solve->add_option("--out", out_path, "Output file (default stdout)");

  std::optional<std::uint64_t> sim_cycles;
  auto* simulate = app.add_subcommand("simulate", "Run the MAC simulation");
  simulate->add_option("--scenario", scenario_path, "Scenario file")->required();
  simulate->add_option("--seed", seed, "Master seed; replication k uses seed + k");
  simulate->add_option("--replications", replications, "Number of replications")->check(CLI::PositiveNumber);
  simulate->add_option("--format", format, "csv or json");
  simulate->add_option("--mode", mode, "Override the scenario mode (renewal or realistic)");
  simulate->add_option("--cycles", sim_cycles, "Stop a renewal run after this many cycles");
  simulate->add_option("--threads", threads, "Worker threads (default: hardware)");
  simulate->add_option("--out", out_path, "Output file (default stdout)");
  simulate->add_option("--trace", trace_path, "Write the event trace here");

  auto* validate = app.add_subcommand("validate", "Renewal run compared against the closed forms");
  validate->add_option("--scenario", scenario_path, "Scenario file")->required();
  validate->add_option("--cycles", cycles, "Cycles to simulate")->required();
  validate->add_option("--seed", seed, "Master seed");
  validate->add_option("--out", out_path, "Output file (default stdout)");

  cli::GapSweepOptions gap;
  double busy_us = 1000.0;
  auto* sweep = app.add_subcommand("gap-sweep", "Optimality gap against the sensing ratio");
  sweep->add_option("--n", gap.n, "Number of devices")->required();
  sweep->add_option("--budgets", gap.budgets, "One budget, or n budgets")->required()->delimiter(',');
  sweep->add_option("--ratio-list", gap.ratios, "Sensing ratios t_s/(L+t_a)")->required()->delimiter(',');
  sweep->add_option("--busy-time-us", busy_us, "L + t_a in microseconds");
  sweep->add_flag("--oracle", gap.oracle, "Also run the brute-force oracle (n <= 4)");
  sweep->add_option("--grid", gap.grid, "Oracle grid points per axis");
  sweep->add_option("--out", out_path, "Output file (default stdout)");

  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  auto* compare = app.add_subcommand("compare", "Life-Add against DCF on identical topology and seeds");
  compare->add_option("--scenario", scenario_path, "Scenario file")->required();
  compare->add_option("--seeds", seeds, "Seed list")->delimiter(',');
  compare->add_option("--threads", threads, "Worker threads (default: hardware)");
  compare->add_option("--out", out_path, "Output file (default stdout)");

  std::string builtin;
  std::optional<double> target;
  int step = 1;
  auto* scen = app.add_subcommand("scenario", "Print a built-in scenario as a scenario file");
  scen->add_option("--builtin", builtin, "homogeneous, heterogeneous, near-far, multi-ap, coexistence")->required();
  scen->add_option("--seed", seed, "Layout and run seed");
  scen->add_option("--target-s", target, "Lifetime target (homogeneous)");
  scen->add_option("--step", step, "Target step (heterogeneous)");
  scen->add_option("--out", out_path, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << cli::error_json("UsageError", e.what());
    return cli::kExitFailure;
  }

  try {
    cli::CommandResult res;
    if (*solve) {
      res = cli::solve(parse_scenario(scenario_path));
    } else if (*simulate) {
      cli::SimulateOptions o;
      o.seed = seed;
      o.replications = replications;
      o.format = cli::parse_format(format);
      o.mode = parse_mode(mode);
      o.max_cycles = sim_cycles;
      o.threads = threads;
      std::ofstream trace;
      if (!trace_path.empty()) {
        trace.open(trace_path, std::ios::binary);
        if (!trace) throw InvalidArgument("cannot open '" + trace_path + "' for writing");
        o.trace = &trace;
      }
      res = cli::simulate(parse_scenario(scenario_path), o);
    } else if (*validate) {
      res = cli::validate(parse_scenario(scenario_path), cycles, seed);
    } else if (*sweep) {
      gap.busy_time = busy_us * 1e-6;
      res = cli::gap_sweep(gap);
    } else if (*compare) {
      res = cli::compare(parse_scenario(scenario_path), seeds, threads);
    } else if (*scen) {
      res = cli::scenario(builtin, seed, target, step);
    }
    write_out(out_path, res.out);
    if (res.exit_code == cli::kExitAcceptance) {
      std::cerr << cli::error_json("AcceptanceFailure", "measured values outside the confidence band");
    }
    return res.exit_code;
  } catch (const lifeadd::error& e) {
    std::cerr << cli::error_json(e.code(), e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << cli::error_json("InternalError", e.what());
    return cli::kExitFailure;
  }
}
