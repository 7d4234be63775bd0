#pragma once

// Formula-vs-measurement comparison for renewal-mode runs. Per-cycle
// probabilities use binomial errors; time fractions are renewal-reward ratio
// estimators with delta-method errors.

#include <cmath>
#include <string>
#include <vector>

#include "lifeadd/analytic.hpp"
#include "lifeadd/error.hpp"
#include "lifeadd/report.hpp"

namespace lifeadd {

struct MetricCheck {
  std::string device;
  std::string metric;  // beta, gamma, p, P
  double analytic = 0.0;
  double measured = 0.0;
  double sigma = 0.0;

  double z() const { return sigma > 0 ? (measured - analytic) / sigma : (measured == analytic ? 0.0 : kInfinity); }
  double relative_error() const { return std::abs(measured - analytic) / std::abs(analytic); }
  bool within(double k = 3.0) const { return std::abs(measured - analytic) <= k * sigma; }
};

namespace detail {
inline double binomial_sigma(double p, double n) { return std::sqrt(std::max(p * (1.0 - p), 0.0) / n); }

// sigma of sum(s)/sum(l) over n i.i.d. cycles
inline double ratio_sigma(double s_sum, double s_sq, double s_len, double l_sum, double l_sq, double n) {
  const double ratio = s_sum / l_sum;
  const double mean_l = l_sum / n;
  const double var = (s_sq - 2.0 * ratio * s_len + ratio * ratio * l_sq) / n;
  return std::sqrt(std::max(var, 0.0) / n) / mean_l;
}
}  // namespace detail

/// Compares a renewal run against the closed forms evaluated at `rates`.
inline std::vector<MetricCheck> renewal_checks(const SimReport& report, const RateVector& rates,
                                               const ContentionParams& params) {
  if (!report.renewal) throw InvalidArgument("report has no renewal statistics");
  const auto& st = *report.renewal;
  if (st.cycles < 2) throw InvalidArgument("need at least two completed cycles");
  if (st.devices.size() != rates.size()) throw InvalidArgument("rate vector does not match the report");
  const double n = static_cast<double>(st.cycles);
  std::vector<MetricCheck> out;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const auto& d = st.devices[i];
    const std::string id = report.devices[i].id;
    const double beta = static_cast<double>(d.wins) / n;
    const double gamma = static_cast<double>(d.attempts) / n;
    out.push_back({id, "beta", success_probability(rates, params, i), beta, detail::binomial_sigma(beta, n)});
    out.push_back({id, "gamma", attempt_probability(rates, params, i), gamma, detail::binomial_sigma(gamma, n)});
    out.push_back({id, "p", success_time_fraction(rates, params, i), d.success_sum / st.len_sum,
                   detail::ratio_sigma(d.success_sum, d.success_sq, d.success_len, st.len_sum, st.len_sq, n)});
    out.push_back({id, "P", radio_on_fraction(rates, params, i), d.on_sum / st.len_sum,
                   detail::ratio_sigma(d.on_sum, d.on_sq, d.on_len, st.len_sum, st.len_sq, n)});
  }
  return out;
}

}  // namespace lifeadd
