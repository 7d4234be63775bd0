#pragma once

// Subcommand bodies for the `lifeadd` tool. Each returns the bytes to print
// and an exit code so the tests can drive them without a process.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "lifeadd/analytic.hpp"
#include "lifeadd/contention.hpp"
#include "lifeadd/error.hpp"
#include "lifeadd/report.hpp"
#include "lifeadd/scenario.hpp"
#include "lifeadd/scenarios.hpp"
#include "lifeadd/solver.hpp"
#include "lifeadd/validation.hpp"

namespace lifeadd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitAcceptance = 3;

enum class Format { Csv, Json };

struct CommandResult {
  int exit_code = kExitOk;
  std::string out;
};

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw InvalidArgument("unknown format '" + s + "' (csv or json)");
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Results are stored
/// by index, so the output order never depends on scheduling.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t n, Fn fn, unsigned threads = 0) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  std::vector<std::optional<T>> slots(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(fn(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  std::vector<T> out;
  out.reserve(n);
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

inline std::string error_json(const std::string& code, const std::string& message) {
  nlohmann::ordered_json j;
  j["error"] = code;
  j["message"] = message;
  return j.dump() + "\n";
}

// ---- solve -----------------------------------------------------------------

inline CommandResult solve(const ScenarioConfig& s) {
  validate_scenario(s);
  const auto topo = s.topology();
  std::vector<double> budgets;
  std::vector<bool> eligible;
  for (std::size_t i = 0; i < s.devices.size(); ++i) {
    budgets.push_back(energy_budget(s.devices[i].energy).b);
    eligible.push_back(s.ap_mac(topo.associated_ap(i)) == Mac::LifeAdd);
  }
  nlohmann::ordered_json j;
  j["aps"] = nlohmann::ordered_json::array();
  std::vector<std::vector<BeaconPayload>> heard(s.devices.size());
  for (std::size_t a = 0; a < s.aps.size(); ++a) {
    if (s.ap_mac(a) != Mac::LifeAdd) continue;
    bool any = false;
    for (std::size_t d : topo.devices_in_range(a)) any = any || eligible[d];
    if (!any) continue;
    const auto res = ap_gather_and_broadcast(a, topo, budgets, s.contention, eligible);
    const RateVector rates(res.assignment.rates);
    const auto bounds = optimality_bounds(res.assignment.budgets, s.contention);
    nlohmann::ordered_json o;
    o["id"] = s.aps[a].id;
    o["regime"] = std::string(to_string(res.assignment.regime));
    o["c_star"] = res.assignment.c_star;
    o["y_star"] = res.assignment.y_star;
    o["lower_bound"] = bounds.lower;
    o["upper_bound"] = bounds.upper;
    o["gap"] = bounds.gap;
    o["members"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < res.members.size(); ++k) {
      const std::size_t d = res.members[k];
      nlohmann::ordered_json m;
      m["device"] = s.devices[d].id;
      m["b"] = budgets[d];
      m["rate_hz"] = rates[k];
      m["success_probability"] = success_probability(rates, s.contention, k);
      m["predicted_throughput_bps"] = throughput(rates, s.contention, k, s.devices[d].alpha);
      m["predicted_radio_on_fraction"] = radio_on_fraction(rates, s.contention, k);
      o["members"].push_back(std::move(m));
    }
    j["aps"].push_back(std::move(o));
    if (!s.options.collaboration) {
      for (std::size_t d : res.members) {
        if (topo.associated_ap(d) == a) heard[d].push_back(res.payload);
      }
    } else {
      for (std::size_t d : res.members) heard[d].push_back(res.payload);
    }
  }
  j["devices"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < s.devices.size(); ++i) {
    nlohmann::ordered_json o;
    o["id"] = s.devices[i].id;
    o["ap"] = s.aps[topo.associated_ap(i)].id;
    o["mac"] = std::string(to_string(s.ap_mac(topo.associated_ap(i))));
    const auto budget = energy_budget(s.devices[i].energy);
    o["e_con_w"] = budget.e_con;
    o["b"] = budget.b;
    o["t_max_s"] = detail::number_or_null(budget.t_max);
    if (eligible[i]) {
      o["rate_hz"] = device_rate_selection(heard[i], budgets[i]);
    } else {
      o["rate_hz"] = nullptr;
    }
    j["devices"].push_back(std::move(o));
  }
  return {kExitOk, j.dump(2) + "\n"};
}

// ---- simulate --------------------------------------------------------------

struct SimulateOptions {
  std::uint64_t seed = 1;
  std::size_t replications = 1;
  Format format = Format::Csv;
  std::optional<SimMode> mode;
  std::optional<std::uint64_t> max_cycles;
  std::ostream* trace = nullptr;  // single replication only
  unsigned threads = 0;
};

inline std::string summary_csv(const std::vector<SimReport>& reports) {
  std::string out = "seed,jain_index,total_utility_nats,mean_lifetime_s,mean_throughput_bps,ack_success_ratio\n";
  std::vector<std::vector<double>> cols(5);
  for (const auto& r : reports) {
    const auto& a = r.aggregate;
    const double v[] = {a.jain_index, a.total_utility_nats, a.mean_lifetime, a.mean_throughput, a.ack_success_ratio};
    out += std::to_string(r.provenance.seed);
    for (std::size_t k = 0; k < 5; ++k) {
      out += ',' + format_number(v[k]);
      cols[k].push_back(v[k]);
    }
    out += '\n';
  }
  std::string mean = "mean", sd = "sd";
  for (const auto& c : cols) {
    const auto ms = detail::mean_sd(c);
    mean += ',' + format_number(ms.first);
    sd += ',' + format_number(ms.second);
  }
  return out + mean + '\n' + sd + '\n';
}

inline CommandResult simulate(const ScenarioConfig& s, const SimulateOptions& o) {
  if (o.replications == 0) throw InvalidArgument("replications must be >= 1");
  if (o.trace && o.replications != 1) throw InvalidArgument("--trace needs a single replication");
  auto run_one = [&](std::size_t k) {
    RunOptions ro;
    ro.seed = o.seed + k;
    ro.mode = o.mode;
    ro.max_cycles = o.max_cycles;
    ro.trace = o.trace;
    return run_scenario(s, ro);
  };
  auto reports = parallel_map<SimReport>(o.replications, run_one, o.threads);
  if (reports.size() == 1) {
    return {kExitOk, o.format == Format::Csv ? emit_csv(reports[0]) : emit_json(reports[0])};
  }
  if (o.format == Format::Csv) {
    std::string out;
    for (const auto& r : reports) out += emit_csv(r) + '\n';
    return {kExitOk, out + summary_csv(reports)};
  }
  nlohmann::ordered_json j;
  j["replications"] = nlohmann::ordered_json::array();
  for (const auto& r : reports) j["replications"].push_back(report_to_json(r));
  const auto stat = [&](auto get) {
    std::vector<double> v;
    for (const auto& r : reports) v.push_back(get(r.aggregate));
    const auto ms = detail::mean_sd(v);
    nlohmann::ordered_json m;
    m["mean"] = detail::number_or_null(ms.first);
    m["sd"] = detail::number_or_null(ms.second);
    return m;
  };
  auto& sum = j["summary"];
  sum["jain_index"] = stat([](const Aggregate& a) { return a.jain_index; });
  sum["total_utility_nats"] = stat([](const Aggregate& a) { return a.total_utility_nats; });
  sum["mean_lifetime_s"] = stat([](const Aggregate& a) { return a.mean_lifetime; });
  sum["mean_throughput_bps"] = stat([](const Aggregate& a) { return a.mean_throughput; });
  sum["ack_success_ratio"] = stat([](const Aggregate& a) { return a.ack_success_ratio; });
  return {kExitOk, j.dump(2) + "\n"};
}

// ---- validate --------------------------------------------------------------

inline CommandResult validate(const ScenarioConfig& s, std::uint64_t cycles, std::uint64_t seed, double k_sigma = 3.0) {
  if (cycles < 2) throw InvalidArgument("--cycles must be >= 2");
  ScenarioConfig r = s;
  r.mode = SimMode::Renewal;
  r.duration = std::max(r.duration, 1e9);  // the cycle count stops the run
  RunOptions ro;
  ro.seed = seed;
  ro.max_cycles = cycles;
  const auto report = run_scenario(r, ro);
  std::vector<double> rates;
  for (const auto& d : report.devices) rates.push_back(d.assigned_rate);
  const auto checks = renewal_checks(report, RateVector(rates), r.contention);
  std::ostringstream out;
  out << "device,metric,analytic,measured,sigma,z,relative_error,verdict\n";
  bool all = true;
  for (const auto& c : checks) {
    const bool ok = c.within(k_sigma);
    all = all && ok;
    out << c.device << ',' << c.metric << ',' << format_number(c.analytic) << ',' << format_number(c.measured) << ','
        << format_number(c.sigma) << ',' << format_number(c.z()) << ',' << format_number(c.relative_error()) << ','
        << (ok ? "pass" : "FAIL") << '\n';
  }
  out << "# cycles=" << report.renewal->cycles << "\n# seed=" << seed << "\n# verdict=" << (all ? "pass" : "FAIL")
      << '\n';
  return {all ? kExitOk : kExitAcceptance, out.str()};
}

// ---- gap-sweep -------------------------------------------------------------

struct GapSweepOptions {
  std::size_t n = 3;
  std::vector<double> budgets;
  std::vector<double> ratios;
  double busy_time = 1e-3;  // L + t_a
  double ack_share = 0.1;   // t_a / (L + t_a)
  bool oracle = false;
  std::size_t grid = 50;
};

inline CommandResult gap_sweep(const GapSweepOptions& o) {
  if (o.n < 1) throw InvalidArgument("--n must be >= 1");
  std::vector<double> b = o.budgets;
  if (b.size() == 1) b.assign(o.n, b[0]);
  if (b.size() != o.n) throw InvalidArgument("--budgets must list one value or n values");
  if (o.ratios.empty()) throw InvalidArgument("--ratio-list is empty");
  std::ostringstream out;
  out << "ratio,t_s,lower,upper,gap,assigned_objective";
  if (o.oracle) out << ",oracle_objective,grid_slack";
  out << '\n';
  for (double rho : o.ratios) {
    if (!(rho > 0)) throw InvalidArgument("ratios must be > 0");
    ContentionParams p;
    p.ack_time = o.ack_share * o.busy_time;
    p.packet_time = o.busy_time - p.ack_time;
    p.t_s = rho * o.busy_time;
    const auto bounds = optimality_bounds(b, p);
    const auto a = assign_rates(b, p);
    const double assigned = problem_a_objective(RateVector(a.rates), p);
    out << format_number(rho) << ',' << format_number(p.t_s) << ',' << format_number(bounds.lower) << ','
        << format_number(bounds.upper) << ',' << format_number(bounds.gap) << ',' << format_number(assigned);
    if (o.oracle) {
      const auto orc = brute_force_oracle(b, p, o.grid);
      out << ',' << format_number(orc.objective) << ',' << format_number(orc.grid_slack);
    }
    out << '\n';
  }
  return {kExitOk, out.str()};
}

// ---- compare ---------------------------------------------------------------

struct CompareRow {
  std::uint64_t seed = 0;
  Aggregate lifeadd, dcf;
};

inline std::vector<CompareRow> compare_runs(const ScenarioConfig& s, const std::vector<std::uint64_t>& seeds,
                                            unsigned threads = 0) {
  if (seeds.empty()) throw InvalidArgument("--seeds is empty");
  return parallel_map<CompareRow>(
      seeds.size(),
      [&](std::size_t k) {
        CompareRow row;
        row.seed = seeds[k];
        row.lifeadd = run_lifeadd(s, seeds[k], SimMode::Realistic).aggregate;
        row.dcf = run_baseline_dcf(s, seeds[k]).aggregate;
        return row;
      },
      threads);
}

inline CommandResult compare(const ScenarioConfig& s, const std::vector<std::uint64_t>& seeds, unsigned threads = 0) {
  const auto rows = compare_runs(s, seeds, threads);
  std::ostringstream out;
  out << "seed,mac,mean_lifetime_s,mean_throughput_bps,jain_index,ack_success_ratio,total_utility_nats\n";
  int wins[4] = {0, 0, 0, 0};
  for (const auto& r : rows) {
    for (const auto* a : {&r.lifeadd, &r.dcf}) {
      out << r.seed << ',' << (a == &r.lifeadd ? "lifeadd" : "dcf") << ',' << format_number(a->mean_lifetime) << ','
          << format_number(a->mean_throughput) << ',' << format_number(a->jain_index) << ','
          << format_number(a->ack_success_ratio) << ',' << format_number(a->total_utility_nats) << '\n';
    }
    wins[0] += r.lifeadd.mean_lifetime > r.dcf.mean_lifetime;
    wins[1] += r.lifeadd.mean_throughput > r.dcf.mean_throughput;
    wins[2] += r.lifeadd.jain_index > r.dcf.jain_index;
    wins[3] += r.lifeadd.ack_success_ratio > r.dcf.ack_success_ratio;
  }
  const char* names[] = {"mean_lifetime_s", "mean_throughput_bps", "jain_index", "ack_success_ratio"};
  for (int k = 0; k < 4; ++k) {
    out << "# lifeadd_ahead_" << names[k] << '=' << wins[k] << '/' << rows.size() << '\n';
  }
  out << "# seeds=";
  for (std::size_t k = 0; k < seeds.size(); ++k) out << (k ? " " : "") << seeds[k];
  out << '\n';
  return {kExitOk, out.str()};
}

// ---- builtin scenarios -----------------------------------------------------

inline ScenarioConfig builtin_scenario(const std::string& name, std::uint64_t seed, std::optional<double> target,
                                       int step) {
  ScenarioConfig s;
  if (name == "homogeneous") {
    s = scenarios::single_ap_homogeneous(3, target);
  } else if (name == "heterogeneous") {
    s = scenarios::heterogeneous_three(step);
  } else if (name == "near-far") {
    s = scenarios::near_far();
  } else if (name == "multi-ap") {
    s = scenarios::random_multi_ap(seed);
  } else if (name == "coexistence") {
    s = scenarios::coexistence(seed);
  } else {
    throw InvalidArgument("unknown builtin scenario '" + name +
                          "' (homogeneous, heterogeneous, near-far, multi-ap, coexistence)");
  }
  s.seed = seed;
  return s;
}

inline CommandResult scenario(const std::string& name, std::uint64_t seed, std::optional<double> target, int step) {
  return {kExitOk, scenario_to_json(builtin_scenario(name, seed, target, step)).dump(2) + "\n"};
}

}  // namespace lifeadd::cli
