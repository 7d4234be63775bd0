#pragma once

// Scenario files: strict JSON, unknown keys rejected. See
// docs/scenario-format.md for the schema.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lifeadd/analytic.hpp"
#include "lifeadd/energy.hpp"
#include "lifeadd/error.hpp"
#include "lifeadd/topology.hpp"

namespace lifeadd {

enum class Mac { LifeAdd, Dcf };
enum class SimMode { Renewal, Realistic };

inline std::string_view to_string(Mac m) { return m == Mac::LifeAdd ? "lifeadd" : "dcf"; }
inline std::string_view to_string(SimMode m) { return m == SimMode::Renewal ? "renewal" : "realistic"; }

/// Per-packet airtime distribution. Empty means every packet lasts the
/// contention parameters' packet_time.
struct PacketAirtime {
  std::vector<double> seconds;
  std::vector<double> weights;

  bool constant() const { return seconds.empty(); }
  double mean() const {
    double w = 0, s = 0;
    for (std::size_t i = 0; i < seconds.size(); ++i) {
      s += seconds[i] * weights[i];
      w += weights[i];
    }
    return s / w;
  }
};

// 802.11b defaults.
struct DcfParams {
  double slot = 20e-6;
  int cw_min = 31;
  int cw_max = 1023;
  double difs = 50e-6;
  int retry_limit = 7;
};

struct MacOptions {
  // Unset: disabled in renewal mode, enabled in realistic mode.
  std::optional<bool> congestion_control;
  bool collaboration = true;
  double beacon_period = 0.1;
  bool lifetime_projection = true;
  DcfParams dcf;
};

struct ApConfig {
  std::string id;
  Position position;
  bool wall_powered = true;
  std::optional<Mac> mac;  // overrides the scenario-wide MAC for its devices
};

struct DeviceConfig {
  std::string id;
  Position position;
  EnergyProfile energy;
  double alpha = 11e6;  // bit/s while transmitting
};

struct ScenarioConfig {
  double field_width = 50.0;
  double field_height = 50.0;
  std::vector<ApConfig> aps;
  std::vector<DeviceConfig> devices;
  Ranges ranges;
  Mac mac = Mac::LifeAdd;
  SimMode mode = SimMode::Realistic;
  ContentionParams contention;
  bool saturated = true;
  PacketAirtime packets;
  // Set when packet lengths come from `packet_bytes`; kept for re-emission.
  std::vector<std::pair<double, double>> packet_bytes;
  double phy_rate_bps = 11e6;
  double phy_overhead = 192e-6;
  double duration = 100.0;
  std::uint64_t seed = 1;
  MacOptions options;

  bool congestion_control() const {
    return options.congestion_control.value_or(mode == SimMode::Realistic);
  }
  Mac ap_mac(std::size_t a) const { return aps[a].mac.value_or(mac); }

  Topology topology() const {
    std::vector<Position> ap_pos, dev_pos;
    for (const auto& a : aps) ap_pos.push_back(a.position);
    for (const auto& d : devices) dev_pos.push_back(d.position);
    return build_topology(std::move(ap_pos), std::move(dev_pos), ranges);
  }
};

/// Every violated invariant of a scenario; empty when valid.
inline std::vector<std::string> scenario_violations(const ScenarioConfig& s) {
  std::vector<std::string> out;
  if (s.devices.empty()) out.emplace_back("scenario has no devices");
  if (s.aps.empty()) out.emplace_back("scenario has no APs");
  if (!(s.duration > 0)) out.emplace_back("duration must be > 0");
  if (!(s.field_width > 0 && s.field_height > 0)) out.emplace_back("field size must be > 0");
  std::set<std::string> ids;
  for (const auto& a : s.aps) {
    if (!ids.insert(a.id).second) out.push_back("duplicate id '" + a.id + "'");
  }
  for (const auto& d : s.devices) {
    if (!ids.insert(d.id).second) out.push_back("duplicate id '" + d.id + "'");
    for (const auto& v : d.energy.violations()) out.push_back("device '" + d.id + "': " + v);
    if (!(d.alpha > 0)) out.push_back("device '" + d.id + "': alpha must be > 0");
  }
  auto inside = [&](Position p) {
    return p.x >= 0 && p.y >= 0 && p.x <= s.field_width && p.y <= s.field_height;
  };
  for (const auto& a : s.aps) {
    if (!inside(a.position)) out.push_back("AP '" + a.id + "' lies outside the field");
  }
  for (const auto& d : s.devices) {
    if (!inside(d.position)) out.push_back("device '" + d.id + "' lies outside the field");
  }
  if (!(s.ranges.sensing >= 0 && s.ranges.interference >= 0 && s.ranges.communication >= 0)) {
    out.emplace_back("ranges must be >= 0");
  }
  try {
    s.contention.validate();
  } catch (const error& e) {
    out.emplace_back(e.what());
  }
  if (!(s.contention.t_s > 0)) out.emplace_back("t_s must be > 0 for simulation");
  if (!s.saturated) out.emplace_back("unsaturated traffic is not supported");
  for (std::size_t i = 0; i < s.packets.seconds.size(); ++i) {
    if (!(s.packets.seconds[i] > 0) || !(s.packets.weights[i] > 0)) {
      out.emplace_back("packet distribution entries need positive length and weight");
      break;
    }
  }
  if (!(s.options.beacon_period > 0)) out.emplace_back("beacon_period must be > 0");
  const auto& dcf = s.options.dcf;
  if (!(dcf.slot > 0 && dcf.difs >= 0 && dcf.cw_min >= 0 && dcf.cw_max >= dcf.cw_min && dcf.retry_limit >= 0)) {
    out.emplace_back("invalid DCF parameters");
  }
  if (out.empty()) {
    try {
      const auto topo = s.topology();
      if (s.mode == SimMode::Renewal) {
        if (!topo.sensing_complete()) out.emplace_back("renewal mode requires every device to sense every other");
        for (std::size_t a = 0; a < s.aps.size(); ++a) {
          if (s.ap_mac(a) != Mac::LifeAdd) out.emplace_back("renewal mode supports only Life-Add APs");
        }
      }
    } catch (const error& e) {
      out.emplace_back(e.what());
    }
  }
  return out;
}

inline void validate_scenario(const ScenarioConfig& s) {
  const auto v = scenario_violations(s);
  if (v.empty()) return;
  std::string msg = "invalid scenario:";
  for (const auto& item : v) msg += "\n  - " + item;
  throw ValidationError(msg);
}

namespace detail {

using json = nlohmann::json;

// Reads one JSON object, tracking which keys were consumed so leftovers can
// be rejected.
class StrictObject {
 public:
  StrictObject(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ParseError(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ParseError(path_ + ": missing required field '" + key + "'");
    used_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number()) throw ParseError(field(key) + ": expected a number");
    return v.get<double>();
  }
  double number_or(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  bool boolean(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ParseError(field(key) + ": expected true or false");
    return v.get<bool>();
  }
  bool boolean_or(const std::string& key, bool fallback) { return has(key) ? boolean(key) : fallback; }

  std::string string(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_string()) throw ParseError(field(key) + ": expected a string");
    return v.get<std::string>();
  }

  std::uint64_t unsigned_integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_unsigned()) throw ParseError(field(key) + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
  }

  int integer(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw ParseError(field(key) + ": expected an integer");
    return v.get<int>();
  }

  Position position(const std::string& key) {
    const auto& v = raw(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw ParseError(field(key) + ": expected [x, y]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  std::string field(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw ParseError(path_ + ": unknown field '" + it.key() + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline double parse_energy_amount(const json& v, const std::string& path) {
  if (v.is_number()) return v.get<double>();
  StrictObject o(v, path);
  const double mah = o.number("mah");
  const double volts = o.number_or("voltage", kDefaultNominalVoltage);
  o.finish();
  return mah_to_joules(mah, volts);
}

inline Mac parse_mac(const std::string& s, const std::string& path) {
  if (s == "lifeadd") return Mac::LifeAdd;
  if (s == "dcf") return Mac::Dcf;
  throw ParseError(path + ": expected \"lifeadd\" or \"dcf\", got \"" + s + "\"");
}

inline EnergyProfile parse_energy(const json& j, const std::string& path) {
  StrictObject o(j, path);
  EnergyProfile p;
  p.initial_energy = parse_energy_amount(o.raw("initial"), o.field("initial"));
  p.battery_capacity = o.has("capacity") ? parse_energy_amount(o.raw("capacity"), o.field("capacity"))
                                         : p.initial_energy;
  p.recharge_rate = o.number_or("recharge_w", 0.0);
  p.radio_on_power = o.number("radio_on_w");
  p.base_power = o.number_or("base_w", 0.0);
  if (o.has("target_lifetime_s")) p.target_lifetime = o.number("target_lifetime_s");
  o.finish();
  return p;
}

// Durations are written at nanosecond resolution, the simulator's clock
// grain, so a parse/emit cycle is stable.
inline double to_us(double seconds) { return std::round(seconds * 1e9) / 1e3; }
inline double to_ms(double seconds) { return std::round(seconds * 1e9) / 1e6; }

inline std::size_t line_of_byte(std::string_view text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace detail

/// Parses and validates scenario text. Malformed input raises ParseError
/// with a line or field path; semantic problems raise ValidationError
/// listing every violation.
inline ScenarioConfig parse_scenario_text(std::string_view text) {
  using detail::json;
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(detail::line_of_byte(text, e.byte > 0 ? e.byte - 1 : 0)) + ": " +
                     e.what());
  }

  ScenarioConfig s;
  detail::StrictObject top(root, "scenario");
  {
    const auto& f = top.raw("field_m");
    if (!f.is_array() || f.size() != 2 || !f[0].is_number() || !f[1].is_number()) {
      throw ParseError("scenario.field_m: expected [width, height]");
    }
    s.field_width = f[0].get<double>();
    s.field_height = f[1].get<double>();
  }

  const auto& aps = top.raw("aps");
  if (!aps.is_array()) throw ParseError("scenario.aps: expected an array");
  for (std::size_t i = 0; i < aps.size(); ++i) {
    detail::StrictObject o(aps[i], "scenario.aps[" + std::to_string(i) + "]");
    ApConfig a;
    a.id = o.string("id");
    a.position = o.position("position");
    a.wall_powered = o.boolean_or("wall_powered", true);
    if (o.has("mac")) a.mac = detail::parse_mac(o.string("mac"), o.field("mac"));
    o.finish();
    s.aps.push_back(std::move(a));
  }

  const auto& devices = top.raw("devices");
  if (!devices.is_array()) throw ParseError("scenario.devices: expected an array");
  for (std::size_t i = 0; i < devices.size(); ++i) {
    const std::string path = "scenario.devices[" + std::to_string(i) + "]";
    detail::StrictObject o(devices[i], path);
    DeviceConfig d;
    d.id = o.string("id");
    d.position = o.position("position");
    d.energy = detail::parse_energy(o.raw("energy"), path + ".energy");
    d.alpha = o.number_or("alpha_bps", 11e6);
    o.finish();
    s.devices.push_back(std::move(d));
  }

  {
    detail::StrictObject o(top.raw("ranges_m"), "scenario.ranges_m");
    s.ranges.sensing = o.number("sensing");
    s.ranges.interference = o.number("interference");
    s.ranges.communication = o.number("communication");
    o.finish();
  }

  s.mac = detail::parse_mac(top.string("mac"), "scenario.mac");
  {
    const auto mode = top.string("mode");
    if (mode == "renewal") s.mode = SimMode::Renewal;
    else if (mode == "realistic") s.mode = SimMode::Realistic;
    else throw ParseError("scenario.mode: expected \"renewal\" or \"realistic\", got \"" + mode + "\"");
  }

  bool packet_time_given = false;
  {
    detail::StrictObject o(top.raw("contention"), "scenario.contention");
    s.contention.t_s = o.number("t_s_us") / 1e6;
    if (o.has("packet_time_us")) {
      s.contention.packet_time = o.number("packet_time_us") / 1e6;
      packet_time_given = true;
    }
    s.contention.ack_time = o.number("ack_time_us") / 1e6;
    o.finish();
  }

  {
    detail::StrictObject o(top.raw("traffic"), "scenario.traffic");
    s.saturated = o.boolean("saturated");
    s.phy_rate_bps = o.number_or("phy_rate_bps", 11e6);
    s.phy_overhead = o.number_or("phy_overhead_us", 192.0) / 1e6;
    if (o.has("packet_bytes")) {
      if (packet_time_given) {
        throw ParseError("scenario.traffic.packet_bytes: conflicts with contention.packet_time_us");
      }
      detail::StrictObject pb(o.raw("packet_bytes"), "scenario.traffic.packet_bytes");
      if (pb.has("constant")) {
        s.packet_bytes.emplace_back(pb.number("constant"), 1.0);
      } else {
        const auto& emp = pb.raw("empirical");
        if (!emp.is_array() || emp.empty()) {
          throw ParseError("scenario.traffic.packet_bytes.empirical: expected a non-empty array");
        }
        for (std::size_t i = 0; i < emp.size(); ++i) {
          detail::StrictObject e(emp[i], "scenario.traffic.packet_bytes.empirical[" + std::to_string(i) + "]");
          const double bytes = e.number("bytes");
          const double weight = e.number("weight");
          e.finish();
          s.packet_bytes.emplace_back(bytes, weight);
        }
      }
      pb.finish();
      for (const auto& [bytes, weight] : s.packet_bytes) {
        s.packets.seconds.push_back(s.phy_overhead + 8.0 * bytes / s.phy_rate_bps);
        s.packets.weights.push_back(weight);
      }
      if (s.packets.seconds.size() == 1) {
        s.contention.packet_time = s.packets.seconds.front();
        s.packets = {};
      } else {
        s.contention.packet_time = s.packets.mean();
      }
    } else if (!packet_time_given) {
      throw ParseError("scenario.contention: packet_time_us is required unless traffic.packet_bytes is given");
    }
    o.finish();
  }

  s.duration = top.number("duration_s");
  s.seed = top.unsigned_integer("seed");

  if (top.has("options")) {
    detail::StrictObject o(top.raw("options"), "scenario.options");
    if (o.has("congestion_control")) s.options.congestion_control = o.boolean("congestion_control");
    s.options.collaboration = o.boolean_or("collaboration", true);
    s.options.beacon_period = o.number_or("beacon_period_ms", 100.0) / 1e3;
    s.options.lifetime_projection = o.boolean_or("lifetime_projection", true);
    if (o.has("dcf")) {
      detail::StrictObject d(o.raw("dcf"), "scenario.options.dcf");
      auto& dcf = s.options.dcf;
      dcf.slot = d.number_or("slot_us", 20.0) / 1e6;
      dcf.difs = d.number_or("difs_us", 50.0) / 1e6;
      if (d.has("cw_min")) dcf.cw_min = d.integer("cw_min");
      if (d.has("cw_max")) dcf.cw_max = d.integer("cw_max");
      if (d.has("retry_limit")) dcf.retry_limit = d.integer("retry_limit");
      d.finish();
    }
    o.finish();
  }
  top.finish();

  validate_scenario(s);
  return s;
}

inline ScenarioConfig parse_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str());
}

/// Inverse of parse_scenario_text; energies are written in joules.
inline nlohmann::ordered_json scenario_to_json(const ScenarioConfig& s) {
  using oj = nlohmann::ordered_json;
  oj j;
  j["field_m"] = {s.field_width, s.field_height};
  j["aps"] = oj::array();
  for (const auto& a : s.aps) {
    oj ap;
    ap["id"] = a.id;
    ap["position"] = {a.position.x, a.position.y};
    ap["wall_powered"] = a.wall_powered;
    if (a.mac) ap["mac"] = std::string(to_string(*a.mac));
    j["aps"].push_back(ap);
  }
  j["devices"] = oj::array();
  for (const auto& d : s.devices) {
    oj dev;
    dev["id"] = d.id;
    dev["position"] = {d.position.x, d.position.y};
    oj e;
    e["initial"] = d.energy.initial_energy;
    e["capacity"] = d.energy.battery_capacity;
    e["recharge_w"] = d.energy.recharge_rate;
    e["radio_on_w"] = d.energy.radio_on_power;
    e["base_w"] = d.energy.base_power;
    if (d.energy.target_lifetime) e["target_lifetime_s"] = *d.energy.target_lifetime;
    dev["energy"] = e;
    dev["alpha_bps"] = d.alpha;
    j["devices"].push_back(dev);
  }
  j["ranges_m"] = {{"sensing", s.ranges.sensing},
                   {"interference", s.ranges.interference},
                   {"communication", s.ranges.communication}};
  j["mac"] = std::string(to_string(s.mac));
  j["mode"] = std::string(to_string(s.mode));
  oj c;
  c["t_s_us"] = detail::to_us(s.contention.t_s);
  if (s.packet_bytes.empty()) c["packet_time_us"] = detail::to_us(s.contention.packet_time);
  c["ack_time_us"] = detail::to_us(s.contention.ack_time);
  j["contention"] = c;
  oj t;
  t["saturated"] = s.saturated;
  if (!s.packet_bytes.empty()) {
    t["phy_rate_bps"] = s.phy_rate_bps;
    t["phy_overhead_us"] = detail::to_us(s.phy_overhead);
    if (s.packet_bytes.size() == 1) {
      t["packet_bytes"] = {{"constant", s.packet_bytes.front().first}};
    } else {
      oj emp = oj::array();
      for (const auto& [bytes, weight] : s.packet_bytes) emp.push_back({{"bytes", bytes}, {"weight", weight}});
      t["packet_bytes"] = {{"empirical", emp}};
    }
  }
  j["traffic"] = t;
  j["duration_s"] = s.duration;
  j["seed"] = s.seed;
  oj o;
  if (s.options.congestion_control) o["congestion_control"] = *s.options.congestion_control;
  o["collaboration"] = s.options.collaboration;
  o["beacon_period_ms"] = detail::to_ms(s.options.beacon_period);
  o["lifetime_projection"] = s.options.lifetime_projection;
  o["dcf"] = {{"slot_us", detail::to_us(s.options.dcf.slot)},
              {"difs_us", detail::to_us(s.options.dcf.difs)},
              {"cw_min", s.options.dcf.cw_min},
              {"cw_max", s.options.dcf.cw_max},
              {"retry_limit", s.options.dcf.retry_limit}};
  j["options"] = o;
  return j;
}

}  // namespace lifeadd
