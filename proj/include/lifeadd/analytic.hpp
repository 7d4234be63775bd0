#pragma once

// Closed-form performance of the sleep-wake contention process. Residual
// sleep times are exponential, so each sleep-wake cycle is an independent
// renewal and every metric below is a ratio of per-cycle expectations.

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lifeadd/error.hpp"

namespace lifeadd {

// Above this sensing ratio the relaxed solution is no longer close to the
// optimum; 802.11b timing sits at or below 0.00783.
inline constexpr double kSensingRatioWarning = 0.01;

/// Shared MAC timing, all in seconds.
struct ContentionParams {
  double t_s = 4e-6;            // carrier sensing time
  double packet_time = 900e-6;  // mean data transmission time L
  double ack_time = 100e-6;     // ACK duration t_a

  double busy_time() const { return packet_time + ack_time; }
  double sensing_ratio() const { return t_s / busy_time(); }
  bool near_optimal_regime() const { return sensing_ratio() <= kSensingRatioWarning; }

  void validate() const {
    if (!(std::isfinite(t_s) && t_s >= 0)) throw InvalidArgument("t_s must be finite and >= 0");
    if (!(std::isfinite(packet_time) && packet_time > 0)) throw InvalidArgument("packet_time must be finite and > 0");
    if (!(std::isfinite(ack_time) && ack_time >= 0)) throw InvalidArgument("ack_time must be finite and >= 0");
  }
};

/// Per-device sleep-rate parameters (1/s). Strictly positive and finite.
class RateVector {
 public:
  RateVector() = default;
  explicit RateVector(std::vector<double> rates) : rates_(std::move(rates)) {
    for (double r : rates_) {
      if (!(std::isfinite(r) && r > 0)) throw InvalidArgument("sleep rates must be finite and > 0");
    }
    total_ = std::accumulate(rates_.begin(), rates_.end(), 0.0);
  }

  std::size_t size() const { return rates_.size(); }
  bool empty() const { return rates_.empty(); }
  double operator[](std::size_t n) const { return rates_[n]; }
  double total() const { return total_; }
  const std::vector<double>& values() const { return rates_; }
  auto begin() const { return rates_.begin(); }
  auto end() const { return rates_.end(); }

 private:
  std::vector<double> rates_;
  double total_ = 0.0;
};

namespace detail {
inline void check_index(const RateVector& rates, std::size_t n) {
  if (n >= rates.size()) throw InvalidArgument("device index out of range");
}
}  // namespace detail

/// Probability that device n wins a cycle: its residual is the smallest and
/// every other residual exceeds it by at least t_s. Evaluated in log space.
inline double success_probability(const RateVector& rates, const ContentionParams& params, std::size_t n) {
  detail::check_index(rates, n);
  const double y = rates.total();
  const double r = rates[n];
  return std::exp(std::log(r) + r * params.t_s - std::log(y) - y * params.t_s);
}

inline double collision_probability(const RateVector& rates, const ContentionParams& params) {
  double sum = 0.0;
  for (std::size_t n = 0; n < rates.size(); ++n) sum += success_probability(rates, params, n);
  return 1.0 - sum;
}

/// Probability that device n transmits in a cycle, successful or not.
inline double attempt_probability(const RateVector& rates, const ContentionParams& params, std::size_t n) {
  detail::check_index(rates, n);
  const double stay = std::exp(-rates[n] * params.t_s);
  return std::min(1.0, -std::expm1(-rates[n] * params.t_s) + stay * rates[n] / rates.total());
}

/// Long-run fraction of time device n spends in successful transmission.
inline double success_time_fraction(const RateVector& rates, const ContentionParams& params, std::size_t n) {
  const double beta = success_probability(rates, params, n);
  return beta * params.packet_time / (params.busy_time() + 1.0 / rates.total());
}

inline double throughput(const RateVector& rates, const ContentionParams& params, std::size_t n, double alpha) {
  return success_time_fraction(rates, params, n) * alpha;
}

/// Long-run fraction of time device n's radio is transmitting or waiting
/// for an ACK.
inline double radio_on_fraction(const RateVector& rates, const ContentionParams& params, std::size_t n) {
  detail::check_index(rates, n);
  const double y = rates.total();
  const double x = rates[n] * params.t_s;
  const double numer = -std::expm1(-x) * y + std::exp(-x) * rates[n];
  return numer / (y + 1.0 / params.busy_time());
}

/// Proportional-fair utility of a rate vector in nats, i.e. the sum of
/// ln(throughput). An empty `alphas` means unit scale for every device.
inline double problem_a_objective(const RateVector& rates, const ContentionParams& params,
                                  std::span<const double> alphas = {}) {
  if (!alphas.empty() && alphas.size() != rates.size()) throw InvalidArgument("alphas size mismatch");
  const auto n = static_cast<double>(rates.size());
  const double y = rates.total();
  double sum_ln_r = 0.0;
  for (double r : rates) sum_ln_r += std::log(r);
  double sum_ln_alpha = 0.0;
  for (double a : alphas) sum_ln_alpha += std::log(a);
  return sum_ln_r - n * std::log(y + 1.0 / params.busy_time()) - (n - 1.0) * y * params.t_s +
         n * std::log(params.packet_time / params.busy_time()) + sum_ln_alpha;
}

/// b_n - P_n for every device; the rates satisfy the energy constraints iff
/// every entry is >= 0.
inline std::vector<double> problem_a_constraint_slack(const RateVector& rates, const ContentionParams& params,
                                                      std::span<const double> budgets) {
  if (budgets.size() != rates.size()) throw InvalidArgument("budget vector size mismatch");
  std::vector<double> slack(rates.size());
  for (std::size_t n = 0; n < rates.size(); ++n) slack[n] = budgets[n] - radio_on_fraction(rates, params, n);
  return slack;
}

inline bool feasible(std::span<const double> slack) {
  for (double s : slack) {
    if (s < 0) return false;
  }
  return true;
}

}  // namespace lifeadd
