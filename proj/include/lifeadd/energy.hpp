#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lifeadd/error.hpp"

namespace lifeadd {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Budget used for devices without a lifetime constraint. Any value above 1
// makes the radio-on constraint vacuous; a finite value keeps water-filling
// arithmetic finite.
inline constexpr double kUnconstrainedBudget = 2.0;

inline constexpr double kDefaultNominalVoltage = 3.7;

/// Battery charge in mAh at a nominal voltage, expressed in joules.
inline double mah_to_joules(double mah, double voltage = kDefaultNominalVoltage) {
  return mah * 3.6 * voltage;
}

/// A device's energy supply and demand. Powers are in watts, energies in
/// joules, times in seconds.
struct EnergyProfile {
  double initial_energy = 0.0;
  double battery_capacity = 0.0;
  double recharge_rate = 0.0;
  double radio_on_power = 1.0;
  double base_power = 0.0;
  std::optional<double> target_lifetime;

  /// Every violated invariant, empty when the profile is valid.
  std::vector<std::string> violations() const {
    std::vector<std::string> out;
    auto check = [&](bool ok, const char* msg) {
      if (!ok) out.emplace_back(msg);
    };
    check(std::isfinite(initial_energy) && initial_energy >= 0, "initial_energy must be finite and >= 0");
    check(std::isfinite(battery_capacity) && battery_capacity >= 0, "battery_capacity must be finite and >= 0");
    check(initial_energy <= battery_capacity, "initial_energy must not exceed battery_capacity");
    check(std::isfinite(recharge_rate) && recharge_rate >= 0, "recharge_rate must be finite and >= 0");
    check(std::isfinite(radio_on_power) && radio_on_power > 0, "radio_on_power must be finite and > 0");
    check(std::isfinite(base_power) && base_power >= 0, "base_power must be finite and >= 0");
    if (target_lifetime) check(*target_lifetime > 0, "target_lifetime must be > 0");
    return out;
  }

  void validate() const {
    auto v = violations();
    if (!v.empty()) throw InvalidArgument("invalid energy profile: " + v.front());
  }
};

/// Radio energy budget derived from a profile.
struct DeviceBudget {
  double e_con = 0.0;  // W available to the radio on average
  double b = 0.0;      // allowed radio-on fraction
  double t_max = kInfinity;
};

/// Longest lifetime the base load alone permits; infinite when recharging
/// covers the base load.
inline double max_feasible_lifetime(const EnergyProfile& p) {
  const double net = p.base_power - p.recharge_rate;
  if (net <= 0) return kInfinity;
  return p.initial_energy / net;
}

inline DeviceBudget energy_budget(const EnergyProfile& p) {
  p.validate();
  DeviceBudget out;
  out.t_max = max_feasible_lifetime(p);
  if (!p.target_lifetime) {
    out.b = kUnconstrainedBudget;
    out.e_con = out.b * p.radio_on_power;
    return out;
  }
  const double target = *p.target_lifetime;
  double e_con = p.initial_energy / target + p.recharge_rate - p.base_power;
  // T_target == T_max lands on zero up to rounding.
  const double scale = std::max({p.initial_energy / target, p.recharge_rate, p.base_power});
  if (e_con < 0 && e_con > -1e-12 * scale) e_con = 0;
  if (e_con < 0) {
    throw InfeasibleLifetime("target lifetime " + std::to_string(target) +
                             " s exceeds the maximum feasible lifetime " + std::to_string(out.t_max) + " s");
  }
  out.e_con = e_con;
  out.b = e_con / p.radio_on_power;
  return out;
}

/// Battery level after `elapsed_total` seconds with `elapsed_radio_on` of
/// them spent with the radio awake. Sleeping radios draw nothing.
inline double battery_level(const EnergyProfile& p, double elapsed_radio_on, double elapsed_total) {
  if (elapsed_radio_on > elapsed_total) throw InvalidArgument("radio-on time exceeds elapsed time");
  const double level = p.initial_energy + p.recharge_rate * elapsed_total - p.base_power * elapsed_total -
                       p.radio_on_power * elapsed_radio_on;
  return std::clamp(level, 0.0, p.battery_capacity);
}

// Piecewise-constant battery integration. The simulator advances it at every
// radio state change, so clamping at capacity and at zero is exact per
// segment.
class Battery {
 public:
  explicit Battery(const EnergyProfile& profile) : profile_(profile), level_(profile.initial_energy) {}

  double level() const { return level_; }
  bool depleted() const { return depleted_; }
  const EnergyProfile& profile() const { return profile_; }

  double net_power(bool radio_on) const {
    return profile_.recharge_rate - profile_.base_power - (radio_on ? profile_.radio_on_power : 0.0);
  }

  // Advances by `dt` seconds at constant radio state. Returns the offset into
  // the segment at which the battery emptied, if it did.
  std::optional<double> advance(double dt, bool radio_on) {
    if (depleted_ || dt <= 0) return std::nullopt;
    const double power = net_power(radio_on);
    const double next = level_ + power * dt;
    if (next <= 0 && power < 0) {
      const double at = level_ / -power;
      level_ = 0;
      depleted_ = true;
      return std::min(at, dt);
    }
    level_ = std::min(next, profile_.battery_capacity);
    return std::nullopt;
  }

 private:
  EnergyProfile profile_;
  double level_;
  bool depleted_ = false;
};

}  // namespace lifeadd
