#pragma once

// Lifetime-constrained sleep-rate assignment.
//
// Energy-rich populations (sum of budgets >= 1) get a water-filled share
// min{b_n, c*} of a common aggregate rate y*, where y* maximizes the
// relaxed utility in closed form. Energy-poor populations (sum < 1) run
// with every energy constraint tight, which has a unique linear solution.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lifeadd/analytic.hpp"
#include "lifeadd/error.hpp"

namespace lifeadd {

enum class Regime { SuperUnit, SubUnit };

inline std::string_view to_string(Regime r) { return r == Regime::SuperUnit ? "super_unit" : "sub_unit"; }

struct SleepRateAssignment {
  Regime regime = Regime::SuperUnit;
  double c_star = 1.0;
  double y_star = 0.0;
  RateVector rates;
  std::vector<double> budgets;
};

namespace detail {
inline double budget_sum(std::span<const double> budgets) {
  for (double b : budgets) {
    if (!(std::isfinite(b) && b >= 0)) throw InvalidArgument("budgets must be finite and >= 0");
  }
  return std::accumulate(budgets.begin(), budgets.end(), 0.0);
}
}  // namespace detail

/// Water-filling level: the c with sum_i min{b_i, c} = 1. The map is
/// piecewise linear and nondecreasing, so the root is solved exactly on the
/// segment between consecutive sorted budgets.
inline double solve_cstar(std::span<const double> budgets) {
  if (budgets.empty()) throw InvalidArgument("no budgets");
  const double total = detail::budget_sum(budgets);
  if (total < 1.0) throw SubUnitRegime("sum of budgets " + std::to_string(total) + " < 1");
  std::vector<double> sorted(budgets.begin(), budgets.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  double prefix = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double c = (1.0 - prefix) / static_cast<double>(n - k);
    if (c <= sorted[k]) return c;
    prefix += sorted[k];
  }
  // Unreachable when total >= 1: the last segment always contains the root.
  return sorted.back();
}

/// Aggregate sleep rate maximizing the relaxed utility. A single contender
/// has no collision penalty and no interior maximum; N-1 is floored at 1.
inline double solve_ystar(std::size_t n_devices, const ContentionParams& params) {
  params.validate();
  if (n_devices == 0) throw InvalidArgument("no devices");
  if (!(params.t_s > 0)) throw InvalidArgument("carrier sensing time must be > 0 to bound the aggregate rate");
  const double n = static_cast<double>(n_devices);
  const double others = std::max(n - 1.0, 1.0);
  const double busy = params.busy_time();
  return (-1.0 + std::sqrt(1.0 + 4.0 * n * busy / (others * params.t_s))) / (2.0 * busy);
}

inline SleepRateAssignment solve_subunit(std::span<const double> budgets, const ContentionParams& params) {
  params.validate();
  if (budgets.empty()) throw InvalidArgument("no budgets");
  const double total = detail::budget_sum(budgets);
  if (total >= 1.0) throw SuperUnitRegime("sum of budgets " + std::to_string(total) + " >= 1");
  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] == 0.0) throw DegenerateBudget("device " + std::to_string(i) + " has a zero energy budget");
  }
  SleepRateAssignment out;
  out.regime = Regime::SubUnit;
  out.c_star = 1.0;
  out.y_star = 1.0 / (params.busy_time() * (1.0 - total));
  std::vector<double> rates(budgets.size());
  for (std::size_t i = 0; i < budgets.size(); ++i) rates[i] = budgets[i] * out.y_star;
  out.rates = RateVector(std::move(rates));
  out.budgets.assign(budgets.begin(), budgets.end());
  return out;
}

/// Rate a device derives from a broadcast (c*, y*) pair.
inline double rate_from_broadcast(double budget, double c_star, double y_star) {
  return std::min(budget, c_star) * y_star;
}

inline SleepRateAssignment assign_rates(std::span<const double> budgets, const ContentionParams& params) {
  params.validate();
  if (budgets.empty()) throw InvalidArgument("no budgets");
  const double total = detail::budget_sum(budgets);
  if (total < 1.0) return solve_subunit(budgets, params);

  for (std::size_t i = 0; i < budgets.size(); ++i) {
    if (budgets[i] == 0.0) throw DegenerateBudget("device " + std::to_string(i) + " has a zero energy budget");
  }
  SleepRateAssignment out;
  out.regime = Regime::SuperUnit;
  out.c_star = solve_cstar(budgets);
  out.y_star = solve_ystar(budgets.size(), params);
  std::vector<double> rates(budgets.size());
  for (std::size_t i = 0; i < budgets.size(); ++i) rates[i] = rate_from_broadcast(budgets[i], out.c_star, out.y_star);
  out.rates = RateVector(std::move(rates));
  out.budgets.assign(budgets.begin(), budgets.end());
  return out;
}

/// Relaxed utility once the per-device split is fixed, as a function of the
/// aggregate rate y alone.
inline double relaxed_objective_of_y(double y, std::size_t n_devices, const ContentionParams& params,
                                     double sum_ln_share, double sum_ln_alpha = 0.0) {
  const double n = static_cast<double>(n_devices);
  const double busy = params.busy_time();
  return n * std::log(y) - n * std::log(y + 1.0 / busy) - (n - 1.0) * y * params.t_s +
         n * std::log(params.packet_time / busy) + sum_ln_alpha + sum_ln_share;
}

struct OptimalityBounds {
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;
};

/// Bracket on the optimum of the relaxed problem. The lower end is what the
/// assignment achieves; the sub-unit solution is exact, so its gap is 0.
inline OptimalityBounds optimality_bounds(std::span<const double> budgets, const ContentionParams& params,
                                          std::span<const double> alphas = {}) {
  if (!alphas.empty() && alphas.size() != budgets.size()) throw InvalidArgument("alphas size mismatch");
  double sum_ln_alpha = 0.0;
  for (double a : alphas) sum_ln_alpha += std::log(a);
  const auto assignment = assign_rates(budgets, params);

  OptimalityBounds out;
  if (assignment.regime == Regime::SubUnit) {
    out.lower = problem_a_objective(assignment.rates, params, alphas);
    out.upper = out.lower;
    out.gap = 0.0;
    return out;
  }
  double sum_ln_share = 0.0;
  for (double b : budgets) sum_ln_share += std::log(std::min(b, assignment.c_star));
  const double n = static_cast<double>(budgets.size());
  const double y = assignment.y_star;
  out.lower = relaxed_objective_of_y(y, budgets.size(), params, sum_ln_share, sum_ln_alpha);
  out.upper = n * std::log(params.packet_time / params.busy_time()) + sum_ln_alpha + sum_ln_share;
  out.gap = n * std::log1p(1.0 / (y * params.busy_time())) + (n - 1.0) * y * params.t_s;
  return out;
}

struct OracleResult {
  RateVector rates;
  double objective = 0.0;
  bool on_boundary = false;  // best point touches the grid's outer edge
  double grid_slack = 0.0;   // objective variation across one refined cell
  std::size_t feasible_points = 0;
};

namespace detail {

inline std::vector<double> log_axis(double lo, double hi, std::size_t points) {
  std::vector<double> axis(points);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < points; ++i) {
    axis[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return axis;
}

// Exhaustive search over the Cartesian product of `axes`, in lexicographic
// order so that ties resolve to the smallest rate vector.
struct GridBest {
  std::vector<std::size_t> index;
  double objective = -std::numeric_limits<double>::infinity();
  std::size_t feasible = 0;
};

inline GridBest search_grid(const std::vector<std::vector<double>>& axes, std::span<const double> budgets,
                            const ContentionParams& params, std::span<const double> alphas) {
  const std::size_t n = axes.size();
  GridBest best;
  std::vector<std::size_t> idx(n, 0);
  std::vector<double> point(n);
  while (true) {
    for (std::size_t k = 0; k < n; ++k) point[k] = axes[k][idx[k]];
    const RateVector rates(point);
    if (feasible(problem_a_constraint_slack(rates, params, budgets))) {
      ++best.feasible;
      const double obj = problem_a_objective(rates, params, alphas);
      if (obj > best.objective) {
        best.objective = obj;
        best.index = idx;
      }
    }
    std::size_t k = n;
    while (k > 0) {
      --k;
      if (++idx[k] < axes[k].size()) break;
      idx[k] = 0;
      if (k == 0) return best;
    }
  }
}

}  // namespace detail

inline constexpr std::size_t kOracleRefinePoints = 21;

/// Independent estimate of the Problem A optimum by grid search under the
/// exact radio-on constraints, with one level of local refinement.
inline OracleResult brute_force_oracle(std::span<const double> budgets, const ContentionParams& params,
                                       std::size_t grid_resolution, std::span<const double> alphas = {}) {
  const std::size_t n = budgets.size();
  if (n == 0 || n > 4) throw InvalidArgument("oracle supports 1 to 4 devices");
  if (grid_resolution < 50) throw InvalidArgument("oracle grid needs at least 50 points per axis");
  const auto assignment = assign_rates(budgets, params);
  const double hi = 10.0 * assignment.y_star;
  const auto axis = detail::log_axis(1.0, hi, grid_resolution);

  std::vector<std::vector<double>> axes(n, axis);
  const auto coarse = detail::search_grid(axes, budgets, params, alphas);
  if (coarse.index.empty()) throw NoFeasiblePoint("no grid point satisfies the energy constraints");

  // Refine inside the neighbouring coarse cells of the best point.
  std::vector<std::vector<double>> fine(n);
  bool boundary = false;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = coarse.index[k];
    if (i == 0 || i + 1 == grid_resolution) boundary = true;
    const double lo = axis[i == 0 ? 0 : i - 1];
    const double up = axis[std::min(i + 1, grid_resolution - 1)];
    fine[k] = detail::log_axis(lo, up, kOracleRefinePoints);
  }
  auto refined = detail::search_grid(fine, budgets, params, alphas);
  if (refined.index.empty() || refined.objective < coarse.objective) {
    // Cannot happen when the coarse best lies on the refined grid, kept for
    // rounding of the log-spaced endpoints.
    refined.objective = coarse.objective;
    refined.index.clear();
  }

  OracleResult out;
  out.feasible_points = coarse.feasible + refined.feasible;
  out.objective = refined.objective;
  std::vector<double> best(n);
  if (refined.index.empty()) {
    for (std::size_t k = 0; k < n; ++k) best[k] = axis[coarse.index[k]];
  } else {
    for (std::size_t k = 0; k < n; ++k) best[k] = fine[k][refined.index[k]];
  }
  out.rates = RateVector(best);
  out.on_boundary = boundary;

  // Largest objective change from the best point to any axis neighbour on
  // the refined grid; feasibility is ignored so the slack is never smaller
  // than the discretization error of the unconstrained surface.
  double slack = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = refined.index.empty() ? kOracleRefinePoints / 2 : refined.index[k];
    for (int step : {-1, 1}) {
      const auto j = static_cast<std::ptrdiff_t>(i) + step;
      if (j < 0 || j >= static_cast<std::ptrdiff_t>(kOracleRefinePoints)) continue;
      auto probe = best;
      probe[k] = fine[k][static_cast<std::size_t>(j)];
      slack = std::max(slack, std::abs(problem_a_objective(RateVector(probe), params, alphas) - out.objective));
    }
  }
  out.grid_slack = slack;
  return out;
}

}  // namespace lifeadd
