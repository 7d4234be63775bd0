#pragma once

// Measured metrics of a simulation run and their CSV/JSON encodings.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "lifeadd/des.hpp"
#include "lifeadd/error.hpp"
#include "lifeadd/scenario.hpp"

namespace lifeadd {

inline constexpr std::string_view kSoftwareVersion = "lifeadd 1.0.0";

namespace detail {
// Mean and sample standard deviation (NaN sd below two samples).
inline std::pair<double, double> mean_sd(std::span<const double> v) {
  if (v.empty()) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, std::numeric_limits<double>::quiet_NaN()};
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return {m, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}
}  // namespace detail

/// Jain's fairness index (sum x)^2 / (N sum x^2).
inline double jain_index(std::span<const double> values) {
  if (values.empty()) throw InvalidArgument("jain_index of an empty set");
  double sum = 0.0, sq = 0.0;
  for (double v : values) {
    if (!(v >= 0) || !std::isfinite(v)) throw InvalidArgument("jain_index needs finite non-negative values");
    sum += v;
    sq += v * v;
  }
  if (sum == 0.0) throw AllZero("jain_index of all-zero values is undefined");
  return sum * sum / (static_cast<double>(values.size()) * sq);
}

struct Utility {
  double nats = 0.0;
  std::size_t excluded = 0;  // zero-throughput devices left out of the sum
};

/// Sum of ln(x) over throughputs in kbps; zeros are counted, not summed.
inline Utility total_utility(std::span<const double> throughputs_kbps) {
  Utility u;
  for (double x : throughputs_kbps) {
    if (x > 0) u.nats += std::log(x);
    else ++u.excluded;
  }
  return u;
}

enum class LifetimeStatus { Depleted, Projected, Censored, Sustained };

inline std::string_view to_string(LifetimeStatus s) {
  switch (s) {
    case LifetimeStatus::Depleted: return "depleted";
    case LifetimeStatus::Projected: return "projected";
    case LifetimeStatus::Censored: return "censored";
    case LifetimeStatus::Sustained: return "sustained";
  }
  return "unknown";
}

struct DeviceReport {
  std::string id;
  Mac mac = Mac::LifeAdd;
  std::string ap;
  double budget = 0.0;
  double throughput_bps = 0.0;
  double radio_on_fraction = 0.0;
  double lifetime_s = kInfinity;
  LifetimeStatus lifetime_status = LifetimeStatus::Sustained;
  std::uint64_t tx_success = 0;
  std::uint64_t tx_collision = 0;
  double assigned_rate = 0.0;
  double mean_effective_rate = 0.0;
  // Raw accumulators (seconds / counts) behind the derived metrics.
  double alive_time = 0.0;
  double success_airtime = 0.0;
  double tx_ack_time = 0.0;
  double sensing_time = 0.0;
  std::uint64_t busy_senses = 0;
};

struct ApReport {
  std::string id;
  Mac mac = Mac::LifeAdd;
  std::size_t members = 0;
  std::string regime;
  double c_star = 0.0;
  double y_star = 0.0;
};

struct Aggregate {
  double jain_index = std::numeric_limits<double>::quiet_NaN();
  double total_utility_nats = 0.0;
  std::size_t zero_throughput_devices = 0;
  double mean_lifetime = std::numeric_limits<double>::quiet_NaN();  // over finite lifetimes
  std::size_t infinite_lifetime_devices = 0;
  double mean_throughput = 0.0;
  double ack_success_ratio = std::numeric_limits<double>::quiet_NaN();
};

struct Provenance {
  std::uint64_t seed = 0;
  SimMode mode = SimMode::Realistic;
  std::string prng{kPrngId};
  std::string version{kSoftwareVersion};
  double sim_end_s = 0.0;
  std::uint64_t events = 0;
};

// Renewal-mode per-cycle accumulators; ratio estimators and their delta-method
// variances are built from these sums.
struct RenewalStats {
  struct PerDevice {
    std::uint64_t attempts = 0;
    std::uint64_t wins = 0;
    double success_sum = 0, success_sq = 0, success_len = 0;  // success airtime reward
    double on_sum = 0, on_sq = 0, on_len = 0;                 // tx + ack/timeout reward
  };
  std::uint64_t cycles = 0;
  std::uint64_t collision_cycles = 0;
  double len_sum = 0, len_sq = 0;
  std::vector<PerDevice> devices;
};

struct SimReport {
  std::vector<DeviceReport> devices;
  std::vector<ApReport> aps;
  Aggregate aggregate;
  Provenance provenance;
  std::optional<RenewalStats> renewal;
};

/// Fills `report.aggregate` from the per-device rows.
inline void compute_aggregate(SimReport& report) {
  Aggregate a;
  std::vector<double> tput, kbps;
  double life_sum = 0.0;
  std::size_t life_count = 0;
  std::uint64_t ok = 0, bad = 0;
  for (const auto& d : report.devices) {
    tput.push_back(d.throughput_bps);
    kbps.push_back(d.throughput_bps / 1e3);
    if (std::isfinite(d.lifetime_s)) {
      life_sum += d.lifetime_s;
      ++life_count;
    } else {
      ++a.infinite_lifetime_devices;
    }
    ok += d.tx_success;
    bad += d.tx_collision;
  }
  if (!tput.empty()) {
    double s = 0.0;
    for (double t : tput) s += t;
    a.mean_throughput = s / static_cast<double>(tput.size());
    if (s > 0) a.jain_index = jain_index(tput);
  }
  const auto u = total_utility(kbps);
  a.total_utility_nats = u.nats;
  a.zero_throughput_devices = u.excluded;
  if (life_count > 0) a.mean_lifetime = life_sum / static_cast<double>(life_count);
  if (ok + bad > 0) a.ack_success_ratio = static_cast<double>(ok) / static_cast<double>(ok + bad);
  report.aggregate = a;
}

/// Shortest round-trip decimal; "inf", "-inf" and "nan" for non-finite values.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline constexpr std::string_view kCsvHeader =
    "device_id,mac,mode,throughput_bps,radio_on_fraction,lifetime_s,tx_success,tx_collision,assigned_rate_hz,"
    "mean_effective_rate_hz";

inline std::string csv_aggregate_block(const Aggregate& a, const Provenance& p) {
  std::string out;
  auto line = [&](std::string_view key, const std::string& value) {
    out += "# ";
    out += key;
    out += '=';
    out += value;
    out += '\n';
  };
  line("jain_index", format_number(a.jain_index));
  line("total_utility_nats", format_number(a.total_utility_nats));
  line("zero_throughput_devices", std::to_string(a.zero_throughput_devices));
  line("mean_lifetime_s", format_number(a.mean_lifetime));
  line("infinite_lifetime_devices", std::to_string(a.infinite_lifetime_devices));
  line("mean_throughput_bps", format_number(a.mean_throughput));
  line("ack_success_ratio", format_number(a.ack_success_ratio));
  line("seed", std::to_string(p.seed));
  line("mode", std::string(to_string(p.mode)));
  line("prng", p.prng);
  line("version", p.version);
  return out;
}

inline std::string emit_csv(const SimReport& r) {
  std::string out(kCsvHeader);
  out += '\n';
  const std::string mode(to_string(r.provenance.mode));
  for (const auto& d : r.devices) {
    out += d.id + ',' + std::string(to_string(d.mac)) + ',' + mode + ',' + format_number(d.throughput_bps) + ',' +
           format_number(d.radio_on_fraction) + ',' + format_number(d.lifetime_s) + ',' +
           std::to_string(d.tx_success) + ',' + std::to_string(d.tx_collision) + ',' +
           format_number(d.assigned_rate) + ',' + format_number(d.mean_effective_rate) + '\n';
  }
  out += csv_aggregate_block(r.aggregate, r.provenance);
  return out;
}

namespace detail {
using ojson = nlohmann::ordered_json;

// Non-finite values have no JSON spelling; they are written as null and
// each field's reader restores its documented meaning.
inline ojson number_or_null(double v) { return std::isfinite(v) ? ojson(v) : ojson(nullptr); }
inline double read_number(const nlohmann::json& v, double if_null) { return v.is_null() ? if_null : v.get<double>(); }
}  // namespace detail

inline nlohmann::ordered_json report_to_json(const SimReport& r) {
  using detail::number_or_null;
  detail::ojson j;
  j["devices"] = detail::ojson::array();
  for (const auto& d : r.devices) {
    detail::ojson o;
    o["id"] = d.id;
    o["mac"] = std::string(to_string(d.mac));
    o["ap"] = d.ap;
    o["budget"] = d.budget;
    o["throughput_bps"] = d.throughput_bps;
    o["radio_on_fraction"] = d.radio_on_fraction;
    o["lifetime_s"] = number_or_null(d.lifetime_s);
    o["lifetime_status"] = std::string(to_string(d.lifetime_status));
    o["tx_success"] = d.tx_success;
    o["tx_collision"] = d.tx_collision;
    o["assigned_rate"] = d.assigned_rate;
    o["mean_effective_rate"] = d.mean_effective_rate;
    j["devices"].push_back(o);
  }
  j["aps"] = detail::ojson::array();
  for (const auto& a : r.aps) {
    detail::ojson o;
    o["id"] = a.id;
    o["mac"] = std::string(to_string(a.mac));
    o["members"] = a.members;
    o["case"] = a.regime;
    o["c_star"] = a.c_star;
    o["y_star"] = a.y_star;
    j["aps"].push_back(o);
  }
  const auto& a = r.aggregate;
  j["aggregate"] = {{"jain_index", number_or_null(a.jain_index)},
                    {"total_utility_nats", a.total_utility_nats},
                    {"zero_throughput_devices", a.zero_throughput_devices},
                    {"mean_lifetime", number_or_null(a.mean_lifetime)},
                    {"infinite_lifetime_devices", a.infinite_lifetime_devices},
                    {"mean_throughput", a.mean_throughput},
                    {"ack_success_ratio", number_or_null(a.ack_success_ratio)}};
  const auto& p = r.provenance;
  j["provenance"] = {{"seed", p.seed},  {"mode", std::string(to_string(p.mode))},
                     {"prng", p.prng},  {"version", p.version},
                     {"sim_end_s", p.sim_end_s}, {"events", p.events}};
  return j;
}

inline std::string emit_json(const SimReport& r) { return report_to_json(r).dump(2) + "\n"; }

inline SimReport parse_report_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text.begin(), text.end());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  auto mac = [](const std::string& s) { return s == "dcf" ? Mac::Dcf : Mac::LifeAdd; };
  auto status = [](const std::string& s) {
    if (s == "depleted") return LifetimeStatus::Depleted;
    if (s == "projected") return LifetimeStatus::Projected;
    if (s == "censored") return LifetimeStatus::Censored;
    return LifetimeStatus::Sustained;
  };
  SimReport r;
  for (const auto& o : j.at("devices")) {
    DeviceReport d;
    d.id = o.at("id").get<std::string>();
    d.mac = mac(o.at("mac").get<std::string>());
    d.ap = o.at("ap").get<std::string>();
    d.budget = o.at("budget").get<double>();
    d.throughput_bps = o.at("throughput_bps").get<double>();
    d.radio_on_fraction = o.at("radio_on_fraction").get<double>();
    d.lifetime_s = detail::read_number(o.at("lifetime_s"), kInfinity);
    d.lifetime_status = status(o.at("lifetime_status").get<std::string>());
    d.tx_success = o.at("tx_success").get<std::uint64_t>();
    d.tx_collision = o.at("tx_collision").get<std::uint64_t>();
    d.assigned_rate = o.at("assigned_rate").get<double>();
    d.mean_effective_rate = o.at("mean_effective_rate").get<double>();
    r.devices.push_back(d);
  }
  for (const auto& o : j.at("aps")) {
    ApReport a;
    a.id = o.at("id").get<std::string>();
    a.mac = mac(o.at("mac").get<std::string>());
    a.members = o.at("members").get<std::size_t>();
    a.regime = o.at("case").get<std::string>();
    a.c_star = o.at("c_star").get<double>();
    a.y_star = o.at("y_star").get<double>();
    r.aps.push_back(a);
  }
  const auto& ag = j.at("aggregate");
  r.aggregate.jain_index = detail::read_number(ag.at("jain_index"), nan);
  r.aggregate.total_utility_nats = ag.at("total_utility_nats").get<double>();
  r.aggregate.zero_throughput_devices = ag.at("zero_throughput_devices").get<std::size_t>();
  r.aggregate.mean_lifetime = detail::read_number(ag.at("mean_lifetime"), nan);
  r.aggregate.infinite_lifetime_devices = ag.at("infinite_lifetime_devices").get<std::size_t>();
  r.aggregate.mean_throughput = ag.at("mean_throughput").get<double>();
  r.aggregate.ack_success_ratio = detail::read_number(ag.at("ack_success_ratio"), nan);
  const auto& p = j.at("provenance");
  r.provenance.seed = p.at("seed").get<std::uint64_t>();
  r.provenance.mode = p.at("mode").get<std::string>() == "renewal" ? SimMode::Renewal : SimMode::Realistic;
  r.provenance.prng = p.at("prng").get<std::string>();
  r.provenance.version = p.at("version").get<std::string>();
  r.provenance.sim_end_s = p.at("sim_end_s").get<double>();
  r.provenance.events = p.at("events").get<std::uint64_t>();
  return r;
}

}  // namespace lifeadd
