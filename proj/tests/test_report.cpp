#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "lifeadd/analytic.hpp"
#include "lifeadd/contention.hpp"
#include "lifeadd/report.hpp"
#include "lifeadd/scenario.hpp"
#include "lifeadd/scenarios.hpp"
#include "lifeadd/solver.hpp"

using namespace lifeadd;

namespace {

// Three devices around one AP, batteries in mAh.
const char* kThreeDevices = R"({
  "field_m": [50, 50],
  "aps": [{"id": "ap0", "position": [25, 25]}],
  "devices": [
    {"id": "n1", "position": [35, 25],
     "energy": {"initial": {"mah": 200}, "capacity": {"mah": 1200}, "recharge_w": 0.187,
                "radio_on_w": 1.12, "base_w": 0.315, "target_lifetime_s": 1080}},
    {"id": "n2", "position": [20, 33],
     "energy": {"initial": {"mah": 100}, "capacity": {"mah": 1200}, "recharge_w": 0.090,
                "radio_on_w": 1.12, "base_w": 0.315, "target_lifetime_s": 540}},
    {"id": "n3", "position": [20, 17],
     "energy": {"initial": {"mah": 66.6, "voltage": 3.7}, "capacity": {"mah": 1200}, "recharge_w": 0.067,
                "radio_on_w": 1.12, "base_w": 0.315, "target_lifetime_s": 360}}
  ],
  "ranges_m": {"sensing": 100, "interference": 100, "communication": 100},
  "mac": "lifeadd",
  "mode": "realistic",
  "contention": {"t_s_us": 4, "packet_time_us": 900, "ack_time_us": 100},
  "traffic": {"saturated": true},
  "duration_s": 60,
  "seed": 7
})";

std::string with_replaced(std::string text, const std::string& from, const std::string& to) {
  const auto at = text.find(from);
  if (at == std::string::npos) throw std::logic_error("pattern not found: " + from);
  return text.replace(at, from.size(), to);
}

double jain_direct(const std::vector<double>& x) {
  double s = 0, q = 0;
  for (double v : x) {
    s += v;
    q += v * v;
  }
  return s * s / (x.size() * q);
}

}  // namespace

TEST(Jain, Examples) {
  const std::vector<double> equal{5, 5, 5}, hot{1, 0, 0, 0};
  EXPECT_DOUBLE_EQ(jain_index(equal), 1.0);
  EXPECT_DOUBLE_EQ(jain_index(hot), 0.25);
}

TEST(Jain, Errors) {
  const std::vector<double> zeros{0, 0}, empty;
  EXPECT_THROW(jain_index(zeros), AllZero);
  EXPECT_THROW(jain_index(empty), InvalidArgument);
}

TEST(Jain, BoundedAndScaleInvariant) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + trial % 9);
    for (auto& v : x) v = trial % 4 == 0 ? std::floor(u(gen) / 5) : u(gen);
    x[0] += 0.1;
    const double j = jain_index(x);
    EXPECT_GE(j, 1.0 / x.size() - 1e-12);
    EXPECT_LE(j, 1.0 + 1e-12);
    EXPECT_NEAR(j, jain_direct(x), 1e-12);
    auto scaled = x;
    for (auto& v : scaled) v *= 123.4;
    EXPECT_NEAR(jain_index(scaled), j, 1e-12);
  }
}

TEST(Utility, Examples) {
  const std::vector<double> ones{1, 1, 1, 1}, es{M_E, M_E, M_E};
  EXPECT_DOUBLE_EQ(total_utility(ones).nats, 0.0);
  EXPECT_NEAR(total_utility(es).nats, 3.0, 1e-12);
}

TEST(Utility, ZerosAreCountedNotSummed) {
  const std::vector<double> x{M_E, 0, 1, 0};
  const auto u = total_utility(x);
  EXPECT_NEAR(u.nats, 1.0, 1e-12);
  EXPECT_EQ(u.excluded, 2u);
}

TEST(Utility, MatchesObjectiveInKbps) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> b(0.05, 1.2), a(1e6, 54e6);
  ContentionParams p;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + trial % 5;
    std::vector<double> budgets(n), alphas(n);
    for (auto& v : budgets) v = b(gen);
    for (auto& v : alphas) v = a(gen);
    const RateVector rates(assign_rates(budgets, p).rates);
    std::vector<double> kbps;
    for (std::size_t i = 0; i < n; ++i) kbps.push_back(throughput(rates, p, i, alphas[i]) / 1000.0);
    const double shifted = problem_a_objective(rates, p, alphas) - n * std::log(1000.0);
    EXPECT_NEAR(total_utility(kbps).nats, shifted, 1e-9 * std::max(1.0, std::abs(shifted)));
  }
}

TEST(Report, CsvLayout) {
  const auto r = run_lifeadd(scenarios::single_ap_homogeneous(3, 10800.0), 1, SimMode::Realistic);
  const auto csv = emit_csv(r);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "device_id,mac,mode,throughput_bps,radio_on_fraction,lifetime_s,tx_success,tx_collision,assigned_rate_hz,"
            "mean_effective_rate_hz");
  std::size_t rows = 0, comments = 0;
  std::size_t pos = csv.find('\n') + 1;
  while (pos < csv.size()) {
    const auto end = csv.find('\n', pos);
    const auto line = csv.substr(pos, end - pos);
    if (line.rfind("# ", 0) == 0) {
      ++comments;
    } else {
      EXPECT_EQ(comments, 0u) << "device row after aggregate block";
      EXPECT_EQ(std::count(line.begin(), line.end(), ','), 9);
      ++rows;
    }
    pos = end + 1;
  }
  EXPECT_EQ(rows, 3u);
  EXPECT_NE(csv.find("# jain_index="), std::string::npos);
  EXPECT_NE(csv.find("# seed=1\n"), std::string::npos);
  EXPECT_NE(csv.find("# prng=xoshiro256**"), std::string::npos);
}

TEST(Report, JsonRoundTripIsByteIdentical) {
  auto s = scenarios::single_ap_homogeneous(3, 10800.0);
  s.devices[0].energy.recharge_rate = 2.0;  // one sustained device, lifetime null
  const auto r = run_lifeadd(s, 4, SimMode::Realistic);
  const auto once = emit_json(r);
  EXPECT_NE(once.find("\"lifetime_s\": null"), std::string::npos);
  EXPECT_EQ(emit_json(parse_report_json(once)), once);
}

TEST(Report, AckRatioInvariant) {
  const auto r = run_lifeadd(scenarios::near_far(), 2, SimMode::Realistic);
  std::uint64_t ok = 0, all = 0;
  for (const auto& d : r.devices) {
    ok += d.tx_success;
    all += d.tx_success + d.tx_collision;
  }
  ASSERT_GT(all, 0u);
  EXPECT_DOUBLE_EQ(r.aggregate.ack_success_ratio, static_cast<double>(ok) / all);
}

TEST(Report, AggregateMatchesDevices) {
  const auto r = run_baseline_dcf(scenarios::single_ap_homogeneous(4, 10800.0), 3);
  std::vector<double> tput;
  for (const auto& d : r.devices) tput.push_back(d.throughput_bps);
  EXPECT_NEAR(r.aggregate.jain_index, jain_direct(tput), 1e-12);
  double m = 0;
  for (double t : tput) m += t;
  EXPECT_NEAR(r.aggregate.mean_throughput, m / tput.size(), 1e-9 * m);
}

TEST(Report, MeanSd) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto [m, sd] = detail::mean_sd(v);
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(sd, std::sqrt(5.0 / 3.0), 1e-15);
  const std::vector<double> one{7};
  EXPECT_TRUE(std::isnan(detail::mean_sd(one).second));
}

TEST(ScenarioFile, HeterogeneousFileParsesMilliampHours) {
  const auto s = parse_scenario_text(kThreeDevices);
  ASSERT_EQ(s.devices.size(), 3u);
  EXPECT_NEAR(s.devices[0].energy.initial_energy, 200 * 3.6 * 3.7, 1e-9);
  EXPECT_NEAR(s.devices[2].energy.initial_energy, 66.6 * 3.6 * 3.7, 1e-9);
  EXPECT_NEAR(s.devices[1].energy.battery_capacity, 1200 * 3.6 * 3.7, 1e-9);
  EXPECT_NEAR(s.contention.t_s, 4e-6, 1e-18);
  EXPECT_EQ(s.seed, 7u);
  const double e_con = 200 * 3.6 * 3.7 / 1080 + 0.187 - 0.315;
  EXPECT_NEAR(energy_budget(s.devices[0].energy).b, e_con / 1.12, 1e-12);
}

TEST(ScenarioFile, RoundTripThroughJson) {
  const auto s = parse_scenario_text(kThreeDevices);
  const auto text = scenario_to_json(s).dump(2);
  const auto again = parse_scenario_text(text);
  EXPECT_EQ(scenario_to_json(again).dump(2), text);
}

TEST(ScenarioFile, EmptyDeviceListInFileIsValidationError) {
  std::string text = kThreeDevices;
  const auto from = text.find("\"devices\": [");
  const auto to = text.find("\"ranges_m\"");
  text.replace(from, to - from, "\"devices\": [],\n  ");
  EXPECT_THROW(parse_scenario_text(text), ValidationError);
}

TEST(ScenarioFile, DuplicateIdRejected) {
  EXPECT_THROW(parse_scenario_text(with_replaced(kThreeDevices, R"("id": "n2")", R"("id": "n1")")), ValidationError);
}

TEST(ScenarioFile, UnknownKeyNamesField) {
  try {
    parse_scenario_text(with_replaced(kThreeDevices, R"("recharge_w": 0.090)", R"("recharge_w": 0.090, "rechrage": 1)"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("scenario.devices[1].energy"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("rechrage"), std::string::npos);
  }
}

TEST(ScenarioFile, SyntaxErrorReportsLine) {
  try {
    parse_scenario_text(with_replaced(kThreeDevices, R"("mac": "lifeadd",)", R"("mac": "lifeadd")"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("line 17", 0), 0u) << e.what();
  }
}

TEST(ScenarioFile, InfeasibleTargetParsesButHasNoBudget) {
  const auto s = parse_scenario_text(with_replaced(kThreeDevices, R"("target_lifetime_s": 360)",
                                                   R"("target_lifetime_s": 3600)"));
  EXPECT_THROW(energy_budget(s.devices[2].energy), InfeasibleLifetime);
}
