#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lifeadd/commands.hpp"

using namespace lifeadd;

namespace {

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(c);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Cli, SolveMatchesSolver) {
  const auto s = scenarios::single_ap_homogeneous(3, 10800.0);
  const auto res = cli::solve(s);
  ASSERT_EQ(res.exit_code, cli::kExitOk);
  const auto j = nlohmann::json::parse(res.out);
  std::vector<double> b;
  for (const auto& d : s.devices) b.push_back(energy_budget(d.energy).b);
  const auto a = assign_rates(b, s.contention);
  ASSERT_EQ(j["aps"].size(), 1u);
  EXPECT_EQ(j["aps"][0]["regime"], std::string(to_string(a.regime)));
  ASSERT_EQ(j["devices"].size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(j["devices"][i]["rate_hz"].get<double>(), a.rates[i]);
    EXPECT_DOUBLE_EQ(j["devices"][i]["b"].get<double>(), b[i]);
    const double p = j["aps"][0]["members"][i]["predicted_radio_on_fraction"].get<double>();
    EXPECT_NEAR(p, radio_on_fraction(RateVector(a.rates), s.contention, i), 1e-15);
  }
}

TEST(Cli, SolveRejectsInfeasibleTarget) {
  EXPECT_THROW(cli::solve(scenarios::heterogeneous_three(10)), InfeasibleLifetime);
}

TEST(Cli, ValidateHomogeneousPasses) {
  auto s = scenarios::single_ap_homogeneous(3, 10800.0, SimMode::Renewal);
  const auto res = cli::validate(s, 200000, 5);
  EXPECT_EQ(res.exit_code, cli::kExitOk) << res.out;
  EXPECT_NE(res.out.find("# verdict=pass"), std::string::npos);
  const auto rows = csv_rows(res.out);
  EXPECT_EQ(rows.size(), 1u + 3 * 4);
}

TEST(Cli, ValidateFailureExitsThree) {
  // a band of 1e-6 sigma cannot hold for a finite run
  auto s = scenarios::single_ap_homogeneous(3, 10800.0, SimMode::Renewal);
  const auto res = cli::validate(s, 2000, 5, 1e-6);
  EXPECT_EQ(res.exit_code, cli::kExitAcceptance);
  EXPECT_NE(res.out.find("# verdict=FAIL"), std::string::npos);
}

TEST(Cli, GapSweepDecreasesWithRatio) {
  cli::GapSweepOptions o;
  o.budgets = {1.0};  // super-unit; a sub-unit sweep has zero gap throughout
  o.ratios = {1e-5, 1e-4, 1e-3, 0.00783, 1e-2};
  const auto rows = csv_rows(cli::gap_sweep(o).out);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0][4], "gap");
  double prev = -1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double gap = std::stod(rows[r][4]);
    EXPECT_GT(gap, prev);
    EXPECT_TRUE(std::isfinite(gap));
    EXPECT_NEAR(std::stod(rows[r][1]), std::stod(rows[r][0]) * 1e-3, 1e-15);
    prev = gap;
  }
}

TEST(Cli, GapSweepArgumentErrors) {
  cli::GapSweepOptions o;
  o.budgets = {0.3, 0.4};
  o.ratios = {1e-3};
  EXPECT_THROW(cli::gap_sweep(o), InvalidArgument);
  o.budgets = {0.3};
  o.ratios = {};
  EXPECT_THROW(cli::gap_sweep(o), InvalidArgument);
}

TEST(Cli, ReplicationsIndependentOfThreadCount) {
  const auto s = scenarios::near_far();
  cli::SimulateOptions o;
  o.seed = 3;
  o.replications = 4;
  o.threads = 1;
  const auto serial = cli::simulate(s, o).out;
  o.threads = 4;
  EXPECT_EQ(cli::simulate(s, o).out, serial);
  o.format = cli::Format::Json;
  const auto j = nlohmann::json::parse(cli::simulate(s, o).out);
  EXPECT_EQ(j["replications"].size(), 4u);
  EXPECT_EQ(j["replications"][2]["provenance"]["seed"], 5u);
  EXPECT_TRUE(j["summary"]["mean_throughput_bps"]["sd"].is_number());
}

TEST(Cli, ReplicationSummaryRows) {
  cli::SimulateOptions o;
  o.seed = 10;
  o.replications = 3;
  const auto out = cli::simulate(scenarios::single_ap_homogeneous(3, 10800.0), o).out;
  const auto at = out.find("seed,jain_index");
  ASSERT_NE(at, std::string::npos);
  const auto rows = csv_rows(out.substr(at));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[1][0], "10");
  EXPECT_EQ(rows[3][0], "12");
  EXPECT_EQ(rows[4][0], "mean");
  EXPECT_EQ(rows[5][0], "sd");
}

TEST(Cli, TraceNeedsSingleReplication) {
  std::ostringstream trace;
  cli::SimulateOptions o;
  o.replications = 2;
  o.trace = &trace;
  EXPECT_THROW(cli::simulate(scenarios::near_far(), o), InvalidArgument);
}

TEST(Cli, CompareCountsAndSeeds) {
  const auto out = cli::compare(scenarios::near_far(), {1, 2}, 2).out;
  EXPECT_NE(out.find("# seeds=1 2\n"), std::string::npos);
  EXPECT_NE(out.find("# lifeadd_ahead_mean_lifetime_s="), std::string::npos);
  EXPECT_EQ(csv_rows(out).size(), 1u + 4);
}

TEST(Cli, BuiltinScenariosRoundTrip) {
  for (const char* name : {"homogeneous", "heterogeneous", "near-far", "multi-ap", "coexistence"}) {
    const auto text = cli::scenario(name, 2, std::nullopt, 1).out;
    const auto parsed = parse_scenario_text(text);
    EXPECT_EQ(parsed.seed, 2u) << name;
    EXPECT_EQ(scenario_to_json(parsed).dump(2) + "\n", text) << name;
  }
  EXPECT_THROW(cli::builtin_scenario("nope", 1, std::nullopt, 1), InvalidArgument);
}

TEST(ParallelMap, KeepsOrderAndRethrows) {
  const auto v = cli::parallel_map<int>(100, [](std::size_t i) { return static_cast<int>(i * i); }, 8);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i], static_cast<int>(i * i));
  EXPECT_THROW(cli::parallel_map<int>(
                   10,
                   [](std::size_t i) -> int {
                     if (i == 7) throw std::runtime_error("boom");
                     return 0;
                   },
                   3),
               std::runtime_error);
}

TEST(ErrorJson, Shape) {
  const auto j = nlohmann::json::parse(cli::error_json("ValidationError", "bad \"id\""));
  EXPECT_EQ(j["error"], "ValidationError");
  EXPECT_EQ(j["message"], "bad \"id\"");
  EXPECT_EQ(cli::parse_format("json"), cli::Format::Json);
  EXPECT_THROW(cli::parse_format("xml"), InvalidArgument);
}
