#pragma once

// MAC-layer simulation of the sleep-wake protocol and of a simplified
// idle-listening 802.11 DCF baseline, over a disc-model topology.
//
// Channel model:
//  * a data frame started at s is detectable by a sensing neighbour from
//    s + t_s on; an ACK is detectable from its first instant.
//  * a data frame fails at its AP if any other frame (data from a device
//    that interferes there, or an ACK from the same or an interfering AP)
//    overlaps it in time. An ACK fails at its device under the same rule.
//  * renewal mode keeps the analytical cycle structure: the whole busy
//    period reads as busy, every sleep timer is redrawn at each cycle end and
//    the cycle closes exactly L + t_a after its first transmission.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lifeadd/analytic.hpp"
#include "lifeadd/des.hpp"
#include "lifeadd/energy.hpp"
#include "lifeadd/error.hpp"
#include "lifeadd/report.hpp"
#include "lifeadd/scenario.hpp"
#include "lifeadd/solver.hpp"
#include "lifeadd/topology.hpp"

namespace lifeadd {

inline constexpr int kMaxCongestionFactor = 32;

struct BeaconPayload {
  std::size_t ap = 0;
  double c_star = 1.0;
  double y_star = 0.0;
};

/// Smallest rate suggested by any heard AP, each evaluated with the
/// device's own budget.
inline double device_rate_selection(std::span<const BeaconPayload> beacons, double own_budget) {
  if (beacons.empty()) throw NoBeacon("device heard no Life-Add beacon");
  double best = kInfinity;
  for (const auto& b : beacons) best = std::min(best, rate_from_broadcast(own_budget, b.c_star, b.y_star));
  return best;
}

struct ApAssignment {
  BeaconPayload payload;
  SleepRateAssignment assignment;
  std::vector<std::size_t> members;
};

/// Solves the rate problem over every eligible device in the AP's
/// communication range, associated with it or not. `eligible` may be empty
/// (all devices count).
inline ApAssignment ap_gather_and_broadcast(std::size_t ap, const Topology& topology, std::span<const double> budgets,
                                            const ContentionParams& params, const std::vector<bool>& eligible = {}) {
  ApAssignment out;
  std::vector<double> member_budgets;
  for (std::size_t d : topology.devices_in_range(ap)) {
    if (!eligible.empty() && !eligible[d]) continue;
    out.members.push_back(d);
    member_budgets.push_back(budgets[d]);
  }
  if (out.members.empty()) throw InvalidArgument("AP has no eligible devices in range");
  out.assignment = assign_rates(member_budgets, params);
  out.payload = {ap, out.assignment.c_star, out.assignment.y_star};
  return out;
}

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<SimMode> mode;
  std::optional<Mac> force_mac;
  std::optional<std::uint64_t> max_cycles;  // renewal mode stop condition
  std::ostream* trace = nullptr;
};

class Simulator {
 public:
  Simulator(ScenarioConfig scenario, RunOptions options)
      : s_(prepare(std::move(scenario), options)), opt_(options), topo_(s_.topology()) {
    seed_ = opt_.seed.value_or(s_.seed);
    renewal_ = s_.mode == SimMode::Renewal;
    congestion_ = s_.congestion_control();
    ts_ = SimTime::from_seconds(s_.contention.t_s);
    ta_ = SimTime::from_seconds(s_.contention.ack_time);
    end_ = SimTime::from_seconds(s_.duration);

    aps_.resize(s_.aps.size());
    for (std::size_t a = 0; a < aps_.size(); ++a) aps_[a].mac = s_.ap_mac(a);

    devices_.reserve(s_.devices.size());
    for (std::size_t i = 0; i < s_.devices.size(); ++i) {
      const auto& cfg = s_.devices[i];
      Device d(RandomStream(seed_, i), Battery(cfg.energy));
      d.ap = topo_.associated_ap(i);
      d.mac = aps_[d.ap].mac;
      d.budget = energy_budget(cfg.energy).b;
      d.cw = s_.options.dcf.cw_min;
      d.beacons.assign(aps_.size(), std::nullopt);
      devices_.push_back(std::move(d));
    }
    packet_ = SimTime::from_seconds(s_.contention.packet_time);
    for (double t : s_.packets.seconds) airtimes_.push_back(SimTime::from_seconds(t));
    double wsum = 0;
    for (double w : s_.packets.weights) cumulative_weights_.push_back(wsum += w);
    if (renewal_) {
      stats_.devices.resize(devices_.size());
      cycle_.rewards.resize(devices_.size());
    }
  }

  SimReport run() {
    for (std::size_t a = 0; a < aps_.size(); ++a) beacon(a, SimTime{});
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      auto& d = devices_[i];
      if (d.mac == Mac::LifeAdd) {
        d.phase = Phase::Sleeping;
        draw_sleep(i, SimTime{});
      } else {
        dcf_begin_backoff(i, SimTime{});
      }
    }
    queue_.schedule(end_, EventKind::EndOfSim);
    const SimTime period = SimTime::from_seconds(s_.options.beacon_period);
    for (std::size_t a = 0; a < aps_.size(); ++a) {
      if (aps_[a].mac == Mac::LifeAdd && period < end_) {
        queue_.schedule(period, EventKind::Beacon, -1, static_cast<std::int32_t>(a));
      }
    }

    while (!stopped_) {
      const Event e = queue_.next();
      const SimTime now = e.time;
      switch (e.kind) {
        case EventKind::EndOfSim: stopped_ = true; break;
        case EventKind::Wake: on_wake(e, now); break;
        case EventKind::BackoffDone: on_backoff_done(e, now); break;
        case EventKind::TxEnd: on_tx_end(static_cast<std::size_t>(e.device), now); break;
        case EventKind::AckEnd: on_ack_end(static_cast<std::size_t>(e.device), now); break;
        case EventKind::Timeout: on_timeout(static_cast<std::size_t>(e.device), now); break;
        case EventKind::CycleEnd: on_cycle_end(now); break;
        case EventKind::Beacon: {
          const auto a = static_cast<std::size_t>(e.ap);
          beacon(a, now);
          if (now + period < end_) queue_.schedule(now + period, EventKind::Beacon, -1, e.ap);
          break;
        }
      }
      if (alive_count() == 0) stopped_ = true;
    }
    return finish(queue_.now());
  }

 private:
  static ScenarioConfig prepare(ScenarioConfig s, const RunOptions& o) {
    if (o.mode) s.mode = *o.mode;
    if (o.force_mac) {
      s.mac = *o.force_mac;
      for (auto& a : s.aps) a.mac.reset();
    }
    validate_scenario(s);
    return s;
  }

  enum class Phase { Sleeping, Backoff, Transmitting, AwaitingAck, Dead };

  struct Device {
    Device(RandomStream r, Battery b) : rng(r), battery(std::move(b)) {}
    RandomStream rng;
    Battery battery;
    Mac mac = Mac::LifeAdd;
    std::size_t ap = 0;
    double budget = 0.0;
    double assigned_rate = 0.0;
    int factor = 1;
    Phase phase = Phase::Sleeping;
    std::uint64_t token = 0;

    // Lazy energy bookkeeping.
    SimTime battery_time{};
    double pending_sense = 0.0;
    bool dead = false;
    double death_time = 0.0;

    // Current transmission.
    SimTime tx_start{}, tx_end{};
    bool data_failed = false;
    bool ack_failed = false;

    // Baseline DCF state.
    int cw = 31;
    int retries = 0;
    std::uint64_t slots_left = 0;
    int busy = 0;
    bool counting = false;
    SimTime countdown_start{};

    std::vector<std::optional<BeaconPayload>> beacons;

    std::uint64_t success = 0, collision = 0, busy_senses = 0;
    double success_airtime = 0, tx_ack_time = 0, sensing_time = 0, on_time = 0;
    double rate_sum = 0;
    std::uint64_t rate_draws = 0;
  };

  struct Ap {
    Mac mac = Mac::LifeAdd;
    bool acking = false;
    SimTime ack_end{};
    std::size_t ack_target = 0;
    bool ack_corrupt = false;
    std::vector<std::size_t> members;
    std::optional<SleepRateAssignment> assignment;
    bool ever_broadcast = false;
  };

  struct Cycle {
    bool active = false;
    SimTime start{};  // previous boundary
    SimTime first_tx{};
    SimTime first_end{};
    std::size_t pending = 0;
    std::vector<std::size_t> transmitters;
    bool boundary_known = false;
    SimTime boundary{};
    struct Reward {
      bool attempted = false, won = false;
      double success = 0, on = 0;
    };
    std::vector<Reward> rewards;
  };

  // ---- helpers -----------------------------------------------------------

  std::size_t alive_count() const {
    std::size_t n = 0;
    for (const auto& d : devices_) n += d.dead ? 0 : 1;
    return n;
  }

  void trace(SimTime now, EventKind kind, std::int64_t device, const std::string& detail) {
    if (!opt_.trace) return;
    *opt_.trace << now.ns << '\t' << to_string(kind) << '\t' << device << '\t' << detail << '\n';
  }

  static bool radio_on(const Device& d) {
    return d.mac == Mac::Dcf || d.phase == Phase::Transmitting || d.phase == Phase::AwaitingAck;
  }

  void energy_step(Device& d, double& cursor, double dt, bool on) {
    if (d.dead || dt <= 0) return;
    if (auto off = d.battery.advance(dt, on)) {
      d.dead = true;
      d.death_time = cursor + *off;
      if (on) d.on_time += *off;
      return;
    }
    if (on) d.on_time += dt;
    cursor += dt;
  }

  // Integrates the battery up to `now`; returns false if it emptied.
  bool account(std::size_t i, SimTime now) {
    auto& d = devices_[i];
    if (d.dead) return false;
    if (now > d.battery_time) {
      double cursor = d.battery_time.seconds();
      const double dt = (now - d.battery_time).seconds();
      if (radio_on(d)) {
        energy_step(d, cursor, dt, true);
      } else {
        const double sense = std::min(d.pending_sense, dt);
        d.pending_sense -= sense;
        d.sensing_time += sense;
        energy_step(d, cursor, sense, true);
        energy_step(d, cursor, dt - sense, false);
      }
      d.battery_time = now;
    }
    if (d.dead) {
      d.phase = Phase::Dead;
      ++d.token;
      trace(now, EventKind::Wake, static_cast<std::int64_t>(i), "dead");
      return false;
    }
    return true;
  }

  SimTime draw_airtime(Device& d) {
    if (airtimes_.empty()) return packet_;
    const double u = d.rng.uniform_open_closed() * cumulative_weights_.back();
    const auto it = std::lower_bound(cumulative_weights_.begin(), cumulative_weights_.end(), u);
    return airtimes_[std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_weights_.begin()),
                                           airtimes_.size() - 1)];
  }

  double effective_rate(const Device& d) const { return d.assigned_rate / d.factor; }

  SimTime next_sleep(Device& d, SimTime from) {
    const double rate = effective_rate(d);
    d.rate_sum += rate;
    ++d.rate_draws;
    return from + SimTime::from_seconds(sample_exponential(d.rng, rate));
  }

  void draw_sleep(std::size_t i, SimTime now) {
    auto& d = devices_[i];
    ++d.token;
    queue_.schedule(next_sleep(d, now), EventKind::Wake, static_cast<std::int32_t>(i), -1, d.token);
  }

  // ---- beacons and rate selection ---------------------------------------

  void beacon(std::size_t a, SimTime now) {
    auto& ap = aps_[a];
    if (ap.mac != Mac::LifeAdd) {
      ap.members.clear();
      for (std::size_t i = 0; i < devices_.size(); ++i) {
        if (devices_[i].ap == a) ap.members.push_back(i);
      }
      return;
    }
    std::vector<bool> eligible(devices_.size());
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      eligible[i] = devices_[i].mac == Mac::LifeAdd && !devices_[i].dead;
    }
    std::vector<std::size_t> members;
    for (std::size_t d : topo_.devices_in_range(a)) {
      if (eligible[d]) members.push_back(d);
    }
    if (members.empty()) return;
    if (!ap.ever_broadcast || members != ap.members) {
      std::vector<double> budgets(devices_.size());
      for (std::size_t i = 0; i < devices_.size(); ++i) budgets[i] = devices_[i].budget;
      auto result = ap_gather_and_broadcast(a, topo_, budgets, s_.contention, eligible);
      ap.members = std::move(result.members);
      ap.assignment = std::move(result.assignment);
      ap.ever_broadcast = true;
      trace(now, EventKind::Beacon, -1,
            "ap=" + std::to_string(a) + " n=" + std::to_string(ap.members.size()) +
                " c=" + format_number(ap.assignment->c_star) + " y=" + format_number(ap.assignment->y_star));
    }
    const BeaconPayload payload{a, ap.assignment->c_star, ap.assignment->y_star};
    for (std::size_t d : topo_.devices_in_range(a)) {
      auto& dev = devices_[d];
      if (dev.mac != Mac::LifeAdd || dev.dead) continue;
      dev.beacons[a] = payload;
      select_rate(d);
    }
  }

  void select_rate(std::size_t i) {
    auto& d = devices_[i];
    std::vector<BeaconPayload> heard;
    if (s_.options.collaboration) {
      for (const auto& b : d.beacons) {
        if (b) heard.push_back(*b);
      }
    } else if (d.beacons[d.ap]) {
      heard.push_back(*d.beacons[d.ap]);
    }
    d.assigned_rate = device_rate_selection(heard, d.budget);
  }

  // ---- carrier sensing ---------------------------------------------------

  // Time until which the channel is certainly busy for a Life-Add device
  // waking at `now`, or nothing if it reads idle.
  std::optional<SimTime> busy_until(std::size_t i, SimTime now) const {
    if (renewal_) {
      if (!cycle_.active || now < cycle_.first_tx + ts_) return std::nullopt;
      if (cycle_.boundary_known) return cycle_.boundary;
      SimTime until = now;
      for (std::size_t j : on_air_) until = std::max(until, devices_[j].tx_end);
      return until;
    }
    bool busy = false;
    SimTime until = now;
    for (std::size_t j : on_air_) {
      if (j != i && topo_.senses(i, j) && devices_[j].tx_start + ts_ <= now) {
        busy = true;
        until = std::max(until, devices_[j].tx_end);
      }
    }
    for (std::size_t a = 0; a < aps_.size(); ++a) {
      if (aps_[a].acking && aps_[a].ack_end > now && topo_.senses_ap(i, a)) {
        busy = true;
        until = std::max(until, aps_[a].ack_end);
      }
    }
    if (!busy) return std::nullopt;
    return until;
  }

  void on_wake(const Event& e, SimTime now) {
    const auto i = static_cast<std::size_t>(e.device);
    auto& d = devices_[i];
    if (e.token != d.token || d.phase != Phase::Sleeping) return;
    if (!account(i, now)) return;
    if (const auto until = busy_until(i, now)) {
      // Every wake inside the busy window finds the channel busy again, so
      // they are drawn here rather than queued.
      const double ts = s_.contention.t_s;
      std::uint64_t senses = 1;
      d.pending_sense += ts;
      SimTime t = next_sleep(d, now);
      while (t < *until) {
        ++senses;
        d.pending_sense += ts;
        t = next_sleep(d, t);
      }
      d.busy_senses += senses;
      ++d.token;
      queue_.schedule(t, EventKind::Wake, static_cast<std::int32_t>(i), -1, d.token);
      trace(now, EventKind::Wake, static_cast<std::int64_t>(i), "busy senses=" + std::to_string(senses));
      return;
    }
    trace(now, EventKind::Wake, static_cast<std::int64_t>(i), "idle");
    start_tx(i, now);
  }

  // ---- transmissions -----------------------------------------------------

  void start_tx(std::size_t i, SimTime now) {
    auto& d = devices_[i];
    d.phase = Phase::Transmitting;
    d.tx_start = now;
    d.tx_end = now + draw_airtime(d);
    d.data_failed = false;
    d.ack_failed = false;
    const std::size_t a = d.ap;
    for (std::size_t j : on_air_) {
      auto& other = devices_[j];
      if (topo_.interferes_at(j, a)) d.data_failed = true;
      if (topo_.interferes_at(i, other.ap)) other.data_failed = true;
    }
    for (std::size_t b = 0; b < aps_.size(); ++b) {
      auto& ap = aps_[b];
      if (!ap.acking) continue;
      if (b == a || topo_.ap_interferes_at_ap(b, a)) d.data_failed = true;
      if (topo_.interferes_at_device(i, ap.ack_target)) ap.ack_corrupt = true;
    }
    on_air_.push_back(i);
    for (std::size_t k : topo_.sensing_neighbours(i)) {
      if (devices_[k].mac == Mac::Dcf) dcf_busy_onset(k, now + ts_);
    }
    queue_.schedule(d.tx_end, EventKind::TxEnd, static_cast<std::int32_t>(i), static_cast<std::int32_t>(a));

    if (renewal_) {
      if (!cycle_.active) {
        cycle_.active = true;
        cycle_.first_tx = now;
        cycle_.first_end = d.tx_end;
        cycle_.boundary_known = false;
        cycle_.transmitters.clear();
        cycle_.pending = 0;
      }
      cycle_.transmitters.push_back(i);
      ++cycle_.pending;
      cycle_.rewards[i].attempted = true;
    }
  }

  void on_tx_end(std::size_t i, SimTime now) {
    auto& d = devices_[i];
    on_air_.erase(std::find(on_air_.begin(), on_air_.end(), i));
    for (std::size_t k : topo_.sensing_neighbours(i)) {
      if (devices_[k].mac == Mac::Dcf) dcf_busy_release(k, now);
    }
    // A device that emptied mid-frame is not cut off the air early; its
    // frame just ends without an ACK.
    const bool alive = account(i, now);
    if (alive) {
      d.phase = Phase::AwaitingAck;
      trace(now, EventKind::TxEnd, static_cast<std::int64_t>(i), d.data_failed ? "corrupted" : "received");
    }

    if (renewal_) {
      if (--cycle_.pending == 0) {
        cycle_.boundary = std::max(cycle_.first_end + ta_, now);
        cycle_.boundary_known = true;
        for (std::size_t j : cycle_.transmitters) {
          if (devices_[j].dead) continue;
          queue_.schedule(cycle_.boundary, devices_[j].data_failed ? EventKind::Timeout : EventKind::AckEnd,
                          static_cast<std::int32_t>(j), static_cast<std::int32_t>(devices_[j].ap));
        }
        queue_.schedule(cycle_.boundary, EventKind::CycleEnd);
      }
      return;
    }
    if (!alive) return;
    if (!d.data_failed) {
      start_ack(d.ap, i, now);
      queue_.schedule(now + ta_, EventKind::AckEnd, static_cast<std::int32_t>(i), static_cast<std::int32_t>(d.ap));
    } else {
      queue_.schedule(now + ta_, EventKind::Timeout, static_cast<std::int32_t>(i), static_cast<std::int32_t>(d.ap));
    }
  }

  void start_ack(std::size_t a, std::size_t target, SimTime now) {
    auto& ap = aps_[a];
    ap.acking = true;
    ap.ack_end = now + ta_;
    ap.ack_target = target;
    ap.ack_corrupt = false;
    for (std::size_t j : on_air_) {
      auto& other = devices_[j];
      if (other.ap == a || topo_.ap_interferes_at_ap(a, other.ap)) other.data_failed = true;
      if (topo_.interferes_at_device(j, target)) ap.ack_corrupt = true;
    }
    for (std::size_t b = 0; b < aps_.size(); ++b) {
      auto& other = aps_[b];
      if (b == a || !other.acking) continue;
      if (topo_.ap_interferes_at_device(b, target)) ap.ack_corrupt = true;
      if (topo_.ap_interferes_at_device(a, other.ack_target)) other.ack_corrupt = true;
    }
    for (std::size_t k = 0; k < devices_.size(); ++k) {
      if (devices_[k].mac == Mac::Dcf && topo_.senses_ap(k, a)) dcf_busy_onset(k, now);
    }
  }

  void end_ack(std::size_t a, SimTime now) {
    auto& ap = aps_[a];
    ap.acking = false;
    for (std::size_t k = 0; k < devices_.size(); ++k) {
      if (devices_[k].mac == Mac::Dcf && topo_.senses_ap(k, a)) dcf_busy_release(k, now);
    }
  }

  void on_ack_end(std::size_t i, SimTime now) {
    auto& d = devices_[i];
    bool ok = true;
    if (!renewal_) {
      ok = !aps_[d.ap].ack_corrupt;
      end_ack(d.ap, now);
    }
    if (!account(i, now)) return;
    complete(i, ok, now, EventKind::AckEnd);
  }

  void on_timeout(std::size_t i, SimTime now) {
    if (!account(i, now)) return;
    complete(i, false, now, EventKind::Timeout);
  }

  void complete(std::size_t i, bool ok, SimTime now, EventKind kind) {
    auto& d = devices_[i];
    const double airtime = (d.tx_end - d.tx_start).seconds();
    const double on = (now - d.tx_start).seconds();
    d.tx_ack_time += on;
    if (ok) {
      ++d.success;
      d.success_airtime += airtime;
      d.factor = 1;
    } else {
      ++d.collision;
      if (congestion_) d.factor = std::min(2 * d.factor, kMaxCongestionFactor);
    }
    if (renewal_) {
      auto& r = cycle_.rewards[i];
      r.won = ok;
      r.success = ok ? airtime : 0.0;
      r.on = on;
    }
    if (d.mac == Mac::Dcf) {
      const auto& dcf = s_.options.dcf;
      if (ok) {
        d.cw = dcf.cw_min;
        d.retries = 0;
      } else if (++d.retries > dcf.retry_limit) {
        d.cw = dcf.cw_min;
        d.retries = 0;
      } else {
        d.cw = std::min(2 * d.cw + 1, dcf.cw_max);
      }
      trace(now, kind, static_cast<std::int64_t>(i), (ok ? "ack cw=" : "timeout cw=") + std::to_string(d.cw));
      dcf_begin_backoff(i, now);
      return;
    }
    trace(now, kind, static_cast<std::int64_t>(i), (ok ? "ack F=" : "timeout F=") + std::to_string(d.factor));
    d.phase = Phase::Sleeping;
    if (!renewal_) draw_sleep(i, now);
  }

  void on_cycle_end(SimTime now) {
    const double len = (now - cycle_.start).seconds();
    ++stats_.cycles;
    stats_.len_sum += len;
    stats_.len_sq += len * len;
    std::size_t winners = 0;
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      auto& r = cycle_.rewards[i];
      auto& pd = stats_.devices[i];
      pd.attempts += r.attempted ? 1 : 0;
      pd.wins += r.won ? 1 : 0;
      winners += r.won ? 1 : 0;
      pd.success_sum += r.success;
      pd.success_sq += r.success * r.success;
      pd.success_len += r.success * len;
      pd.on_sum += r.on;
      pd.on_sq += r.on * r.on;
      pd.on_len += r.on * len;
      r = {};
    }
    if (winners == 0) ++stats_.collision_cycles;
    trace(now, EventKind::CycleEnd, -1, "len_ns=" + std::to_string((now - cycle_.start).ns));
    cycle_.active = false;
    cycle_.start = now;
    if (opt_.max_cycles && stats_.cycles >= *opt_.max_cycles) {
      stopped_ = true;
      return;
    }
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      if (!devices_[i].dead && devices_[i].phase == Phase::Sleeping) draw_sleep(i, now);
    }
  }

  // ---- baseline DCF --------------------------------------------------------

  void dcf_begin_backoff(std::size_t i, SimTime now) {
    auto& d = devices_[i];
    d.phase = Phase::Backoff;
    d.slots_left = d.rng.uniform_below(static_cast<std::uint64_t>(d.cw) + 1);
    d.counting = false;
    ++d.token;
    if (d.busy == 0) dcf_resume(i, now);
  }

  void dcf_resume(std::size_t i, SimTime now) {
    auto& d = devices_[i];
    d.countdown_start = now + SimTime::from_seconds(s_.options.dcf.difs);
    d.counting = true;
    ++d.token;
    const SimTime fire{d.countdown_start.ns + d.slots_left * SimTime::from_seconds(s_.options.dcf.slot).ns};
    queue_.schedule(fire, EventKind::BackoffDone, static_cast<std::int32_t>(i), -1, d.token);
  }

  // The channel turns busy for device k at `effective` (possibly later than
  // now, for undetected data frames).
  void dcf_busy_onset(std::size_t k, SimTime effective) {
    auto& d = devices_[k];
    if (++d.busy != 1 || d.dead || d.phase != Phase::Backoff || !d.counting) return;
    const std::uint64_t slot = SimTime::from_seconds(s_.options.dcf.slot).ns;
    const SimTime fire{d.countdown_start.ns + d.slots_left * slot};
    if (fire < effective) return;  // counter expires before the frame is detectable
    if (effective > d.countdown_start) {
      const std::uint64_t done = (effective - d.countdown_start).ns / slot;
      d.slots_left -= std::min(done, d.slots_left);
    }
    d.counting = false;
    ++d.token;
  }

  void dcf_busy_release(std::size_t k, SimTime now) {
    auto& d = devices_[k];
    if (--d.busy == 0 && !d.dead && d.phase == Phase::Backoff && !d.counting) dcf_resume(k, now);
  }

  void on_backoff_done(const Event& e, SimTime now) {
    const auto i = static_cast<std::size_t>(e.device);
    auto& d = devices_[i];
    if (e.token != d.token || d.phase != Phase::Backoff) return;
    if (!account(i, now)) return;
    d.counting = false;
    trace(now, EventKind::BackoffDone, static_cast<std::int64_t>(i), "tx");
    start_tx(i, now);
  }

  // ---- report --------------------------------------------------------------

  SimReport finish(SimTime now) {
    SimReport r;
    const double t_end = now.seconds();
    for (std::size_t i = 0; i < devices_.size(); ++i) {
      account(i, now);
      const auto& d = devices_[i];
      const auto& cfg = s_.devices[i];
      DeviceReport out;
      out.id = cfg.id;
      out.mac = d.mac;
      out.ap = s_.aps[d.ap].id;
      out.budget = d.budget;
      out.alive_time = d.dead ? d.death_time : t_end;
      out.success_airtime = d.success_airtime;
      out.tx_ack_time = d.tx_ack_time;
      out.sensing_time = d.sensing_time;
      out.busy_senses = d.busy_senses;
      out.tx_success = d.success;
      out.tx_collision = d.collision;
      if (out.alive_time > 0) {
        out.throughput_bps = cfg.alpha * d.success_airtime / out.alive_time;
        out.radio_on_fraction = d.on_time / out.alive_time;
      }
      out.assigned_rate = d.mac == Mac::LifeAdd ? d.assigned_rate : 0.0;
      out.mean_effective_rate = d.rate_draws ? d.rate_sum / static_cast<double>(d.rate_draws) : 0.0;
      if (d.dead) {
        out.lifetime_s = d.death_time;
        out.lifetime_status = LifetimeStatus::Depleted;
      } else {
        const auto& p = cfg.energy;
        const double drain = p.base_power - p.recharge_rate + p.radio_on_power * out.radio_on_fraction;
        if (drain <= 0) {
          out.lifetime_s = kInfinity;
          out.lifetime_status = LifetimeStatus::Sustained;
        } else if (s_.options.lifetime_projection) {
          out.lifetime_s = t_end + d.battery.level() / drain;
          out.lifetime_status = LifetimeStatus::Projected;
        } else {
          out.lifetime_s = t_end;
          out.lifetime_status = LifetimeStatus::Censored;
        }
      }
      r.devices.push_back(std::move(out));
    }
    for (std::size_t a = 0; a < aps_.size(); ++a) {
      ApReport ap;
      ap.id = s_.aps[a].id;
      ap.mac = aps_[a].mac;
      ap.members = aps_[a].members.size();
      if (aps_[a].assignment) {
        ap.regime = std::string(to_string(aps_[a].assignment->regime));
        ap.c_star = aps_[a].assignment->c_star;
        ap.y_star = aps_[a].assignment->y_star;
      }
      r.aps.push_back(std::move(ap));
    }
    compute_aggregate(r);
    r.provenance.seed = seed_;
    r.provenance.mode = s_.mode;
    r.provenance.sim_end_s = t_end;
    r.provenance.events = queue_.processed();
    if (renewal_) r.renewal = stats_;
    return r;
  }

  ScenarioConfig s_;
  RunOptions opt_;
  Topology topo_;
  std::uint64_t seed_ = 0;
  bool renewal_ = false;
  bool congestion_ = true;
  SimTime ts_{}, ta_{}, end_{}, packet_{};
  std::vector<SimTime> airtimes_;
  std::vector<double> cumulative_weights_;
  std::vector<Device> devices_;
  std::vector<Ap> aps_;
  std::vector<std::size_t> on_air_;
  EventQueue queue_;
  Cycle cycle_;
  RenewalStats stats_;
  bool stopped_ = false;
};

/// Runs the scenario with every AP and device on the sleep-wake protocol.
inline SimReport run_lifeadd(const ScenarioConfig& scenario, std::uint64_t seed, SimMode mode,
                             std::ostream* trace = nullptr) {
  RunOptions o;
  o.seed = seed;
  o.mode = mode;
  o.force_mac = Mac::LifeAdd;
  o.trace = trace;
  return Simulator(scenario, o).run();
}

/// Runs the scenario with every AP and device on the idle-listening DCF.
inline SimReport run_baseline_dcf(const ScenarioConfig& scenario, std::uint64_t seed, std::ostream* trace = nullptr) {
  RunOptions o;
  o.seed = seed;
  o.mode = SimMode::Realistic;
  o.force_mac = Mac::Dcf;
  o.trace = trace;
  return Simulator(scenario, o).run();
}

/// Runs the scenario as configured (per-AP MAC overrides honoured).
inline SimReport run_scenario(const ScenarioConfig& scenario, RunOptions options = {}) {
  return Simulator(scenario, options).run();
}

}  // namespace lifeadd
