#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lifeadd/energy.hpp"

using namespace lifeadd;

namespace {

EnergyProfile profile(double b, double r, double base, double rf, std::optional<double> target = std::nullopt) {
  EnergyProfile p;
  p.initial_energy = b;
  p.battery_capacity = std::max(b, 1.0) * 2;
  p.recharge_rate = r;
  p.base_power = base;
  p.radio_on_power = rf;
  p.target_lifetime = target;
  return p;
}

}  // namespace

TEST(MaxFeasibleLifetime, HandArithmetic) {
  EXPECT_DOUBLE_EQ(max_feasible_lifetime(profile(3600, 0.1, 0.3, 1.0)), 18000.0);
}

TEST(MaxFeasibleLifetime, BalancedRechargeIsInfinite) {
  EXPECT_TRUE(std::isinf(max_feasible_lifetime(profile(3600, 0.3, 0.3, 1.0))));
  EXPECT_TRUE(std::isinf(max_feasible_lifetime(profile(3600, 2.0, 0.3, 1.0))));
}

TEST(MaxFeasibleLifetime, EmptyBattery) { EXPECT_EQ(max_feasible_lifetime(profile(0, 0.1, 0.3, 1.0)), 0.0); }

TEST(EnergyBudget, HandArithmetic) {
  const auto b = energy_budget(profile(3600, 0.1, 0.3, 1.0, 3600.0));
  EXPECT_NEAR(b.e_con, 0.8, 1e-12);
  EXPECT_NEAR(b.b, 0.8, 1e-12);
  EXPECT_DOUBLE_EQ(b.t_max, 18000.0);
}

TEST(EnergyBudget, TargetAtMaximumExhaustsBudget) {
  const auto b = energy_budget(profile(3600, 0.1, 0.3, 1.0, 18000.0));
  EXPECT_NEAR(b.e_con, 0.0, 1e-15);
  EXPECT_NEAR(b.b, 0.0, 1e-15);
}

TEST(EnergyBudget, HtcHandset) {
  EXPECT_NEAR(mah_to_joules(1.0), 13.32, 1e-12);
  EXPECT_NEAR(mah_to_joules(300.0), 3996.0, 1e-9);
  EnergyProfile p = profile(mah_to_joules(300.0), 0.160, 0.315, 1.120, 7200.0);
  const auto b = energy_budget(p);
  EXPECT_NEAR(b.e_con, 3996.0 / 7200.0 + 0.160 - 0.315, 1e-12);
  EXPECT_NEAR(b.e_con, 0.400, 1e-3);
  EXPECT_NEAR(b.b, 0.357, 1e-3);
}

TEST(EnergyBudget, NoTargetIsUnconstrained) {
  EXPECT_EQ(energy_budget(profile(3600, 0.1, 0.3, 1.0)).b, kUnconstrainedBudget);
}

TEST(EnergyBudget, InfeasibleTargetRejected) {
  EXPECT_THROW(energy_budget(profile(3600, 0.1, 0.3, 1.0, 18001.0)), InfeasibleLifetime);
}

TEST(EnergyBudget, NonPositiveTargetRejected) {
  EXPECT_THROW(energy_budget(profile(3600, 0.1, 0.3, 1.0, 0.0)), lifeadd::error);
}

TEST(EnergyBudget, MonotoneInTargetAndRecharge) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double B = 1000 + 9000 * u(gen), base = 0.1 + 0.4 * u(gen), r = base * u(gen) * 0.9;
    const double tmax = B / (base - r);
    const double t1 = tmax * (0.05 + 0.45 * u(gen)), t2 = t1 * (1.0 + u(gen));
    EXPECT_GE(energy_budget(profile(B, r, base, 1.0, t1)).b, energy_budget(profile(B, r, base, 1.0, t2)).b);
    const double r2 = r + (base - r) * 0.5 * u(gen);
    EXPECT_LE(energy_budget(profile(B, r, base, 1.0, t1)).b, energy_budget(profile(B, r2, base, 1.0, t1)).b);
  }
}

TEST(BatteryLevel, Examples) {
  const auto p = profile(100, 0.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(battery_level(p, 0, 0), 100.0);
  EXPECT_DOUBLE_EQ(battery_level(p, 25, 50), 25.0);
  const auto balanced = profile(100, 0.5, 0.5, 1.0);
  EXPECT_DOUBLE_EQ(battery_level(balanced, 0, 1e6), 100.0);
  EXPECT_THROW(battery_level(p, 2, 1), InvalidArgument);
}

TEST(BatteryLevel, ClampedToCapacityAndZero) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    auto p = profile(100 * u(gen), 3.0 * u(gen), u(gen), 0.1 + u(gen));
    const double total = 1000 * u(gen), on = total * u(gen);
    const double level = battery_level(p, on, total);
    EXPECT_GE(level, 0.0);
    EXPECT_LE(level, p.battery_capacity);
  }
}

TEST(Battery, DepletesAtTargetWhenRadioOnFractionEqualsBudget) {
  for (double target : {3600.0, 7200.0, 20000.0}) {  // b <= 1 at each
    EnergyProfile p = profile(mah_to_joules(300.0), 0.160, 0.315, 1.120, target);
    p.battery_capacity = mah_to_joules(1200.0);
    const double b = energy_budget(p).b;
    Battery bat(p);
    const double dt = 0.01;  // one on/off period
    double t = 0;
    std::optional<double> died;
    while (!died) {
      if (auto off = bat.advance(b * dt, true)) {
        died = t + *off;
        break;
      }
      t += b * dt;
      if (auto off = bat.advance((1 - b) * dt, false)) died = t + *off;
      t += (1 - b) * dt;
    }
    EXPECT_NEAR(*died, target, dt) << "target " << target;
    EXPECT_TRUE(bat.depleted());
    EXPECT_EQ(bat.level(), 0.0);
  }
}

TEST(Battery, RechargeStopsAtCapacity) {
  EnergyProfile p = profile(10, 2.0, 0.3, 1.0);
  p.battery_capacity = 20;
  Battery bat(p);
  EXPECT_FALSE(bat.advance(100.0, false));
  EXPECT_DOUBLE_EQ(bat.level(), 20.0);
}

TEST(EnergyProfile, Violations) {
  EnergyProfile p = profile(10, 0.1, 0.3, 1.0);
  EXPECT_TRUE(p.violations().empty());
  p.initial_energy = p.battery_capacity + 1;
  EXPECT_FALSE(p.violations().empty());
  p = profile(10, 0.1, 0.3, 0.0);
  EXPECT_FALSE(p.violations().empty());
  p = profile(10, -0.1, 0.3, 1.0);
  EXPECT_FALSE(p.violations().empty());
  EXPECT_THROW(p.validate(), lifeadd::error);
}
