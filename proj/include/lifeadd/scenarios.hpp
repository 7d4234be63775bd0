#pragma once

// Built-in scenarios used by the CLI, the tests and the acceptance runs.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "lifeadd/des.hpp"
#include "lifeadd/energy.hpp"
#include "lifeadd/error.hpp"
#include "lifeadd/scenario.hpp"

namespace lifeadd::scenarios {

// HTC Tilt class handset: 1120 mW radio, 315 mW for everything else,
// 1200 mAh cell.
inline constexpr double kHtcRadioPower = 1.12;
inline constexpr double kHtcBasePower = 0.315;
inline constexpr double kHtcCapacityMah = 1200.0;
inline constexpr double kSolarRecharge = 0.16;
inline constexpr double kWallRecharge = 2.0;

inline EnergyProfile htc_profile(double initial_mah, double recharge_w, std::optional<double> target = std::nullopt) {
  EnergyProfile p;
  p.initial_energy = mah_to_joules(initial_mah);
  p.battery_capacity = mah_to_joules(kHtcCapacityMah);
  p.recharge_rate = recharge_w;
  p.radio_on_power = kHtcRadioPower;
  p.base_power = kHtcBasePower;
  p.target_lifetime = target;
  return p;
}

/// One AP in the middle of a 50 m x 50 m field with `n` identical devices
/// (300 mAh, 160 mW solar) on a 10 m ring around it.
inline ScenarioConfig single_ap_homogeneous(std::size_t n = 3, std::optional<double> target = std::nullopt,
                                            SimMode mode = SimMode::Realistic) {
  ScenarioConfig s;
  s.field_width = s.field_height = 50.0;
  s.mode = mode;
  s.duration = 600.0;
  s.aps.push_back({"ap0", {25.0, 25.0}, true, std::nullopt});
  for (std::size_t i = 0; i < n; ++i) {
    const double th = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n);
    s.devices.push_back({"d" + std::to_string(i), {25.0 + 10.0 * std::cos(th), 25.0 + 10.0 * std::sin(th)},
                         htc_profile(300.0, kSolarRecharge, target), 11e6});
  }
  return s;
}

/// Heterogeneous three-device case. Step k (1-based) sets the targets to
/// k x 18, 9 and 6 minutes.
inline ScenarioConfig heterogeneous_three(int step, SimMode mode = SimMode::Realistic) {
  if (step < 1) throw InvalidArgument("step must be >= 1");
  auto s = single_ap_homogeneous(3, std::nullopt, mode);
  const double mah[] = {200.0, 100.0, 66.6};
  const double r[] = {0.187, 0.090, 0.067};
  const double minutes[] = {18.0, 9.0, 6.0};
  for (std::size_t i = 0; i < 3; ++i) {
    s.devices[i].energy = htc_profile(mah[i], r[i], 60.0 * minutes[i] * step);
  }
  return s;
}

/// Two APs, two devices. D1 belongs to AP1 but its frames also reach AP2;
/// D2's frames never reach AP1. The devices hear each other, so only D2
/// loses frames when both start within the sensing window.
inline ScenarioConfig near_far() {
  ScenarioConfig s;
  s.field_width = 200.0;
  s.field_height = 50.0;
  s.ranges = {120.0, 100.0, 100.0};
  s.duration = 300.0;
  s.aps.push_back({"ap1", {10.0, 25.0}, true, std::nullopt});
  s.aps.push_back({"ap2", {130.0, 25.0}, true, std::nullopt});
  s.devices.push_back({"d1", {50.0, 25.0}, htc_profile(1000.0, kWallRecharge), 11e6});
  s.devices.push_back({"d2", {160.0, 25.0}, htc_profile(1000.0, kWallRecharge), 11e6});
  return s;
}

inline constexpr std::uint64_t kLayoutStream = 0xF1E1D000ULL;

/// Random multi-AP deployment. APs are uniform in the field; each device is
/// dropped uniformly in a disc of radius 0.95 x communication range around a
/// uniformly chosen AP so that every device can associate. Device i is
/// battery-only, solar or wall powered by i mod 3; initial charge is uniform
/// in [200, 1000] mAh and no lifetime target is set.
inline ScenarioConfig random_multi_ap(std::uint64_t seed, std::size_t n_aps = 4, std::size_t n_devices = 30,
                                      double field = 500.0) {
  ScenarioConfig s;
  s.field_width = s.field_height = field;
  s.seed = seed;
  s.duration = 300.0;
  RandomStream rng(seed, kLayoutStream);
  const double margin = 20.0;
  for (std::size_t a = 0; a < n_aps; ++a) {
    s.aps.push_back({"ap" + std::to_string(a), {rng.uniform(margin, field - margin), rng.uniform(margin, field - margin)},
                     true, std::nullopt});
  }
  const double radius = 0.95 * s.ranges.communication;
  const double recharge[] = {0.0, kSolarRecharge, kWallRecharge};
  for (std::size_t i = 0; i < n_devices; ++i) {
    Position p;
    for (;;) {
      const auto& ap = s.aps[rng.uniform_below(n_aps)].position;
      const double rr = radius * std::sqrt(rng.uniform_open_closed());
      const double th = rng.uniform(0.0, 2.0 * std::numbers::pi);
      p = {ap.x + rr * std::cos(th), ap.y + rr * std::sin(th)};
      if (p.x >= 0 && p.y >= 0 && p.x <= field && p.y <= field) break;
    }
    const double mah = rng.uniform(200.0, 1000.0);
    s.devices.push_back({"d" + std::to_string(i), p, htc_profile(mah, recharge[i % 3]), 11e6});
  }
  return s;
}

/// Random deployment where the first `lifeadd_aps` APs run the sleep-wake
/// protocol and the rest stay on DCF.
inline ScenarioConfig coexistence(std::uint64_t seed, std::size_t lifeadd_aps = 2) {
  auto s = random_multi_ap(seed);
  s.mac = Mac::Dcf;
  for (std::size_t a = 0; a < s.aps.size(); ++a) s.aps[a].mac = a < lifeadd_aps ? Mac::LifeAdd : Mac::Dcf;
  return s;
}

}  // namespace lifeadd::scenarios
