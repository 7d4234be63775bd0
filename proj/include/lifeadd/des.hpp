#pragma once

// Discrete-event kernel: integer-nanosecond clock, a (time, sequence)
// ordered event queue and per-entity random streams.

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lifeadd/error.hpp"

namespace lifeadd {

/// Nanoseconds since simulation start. Also used for durations.
struct SimTime {
  std::uint64_t ns = 0;

  static constexpr SimTime max() { return {std::numeric_limits<std::uint64_t>::max()}; }

  /// Rounds half up to the nearest nanosecond; negative input is an error.
  static SimTime from_seconds(double s) {
    if (!(s >= 0) || !std::isfinite(s)) throw InvalidArgument("SimTime from non-finite or negative seconds");
    const double ns = std::floor(s * 1e9 + 0.5);
    if (ns >= 1.8e19) return max();
    return {static_cast<std::uint64_t>(ns)};
  }

  double seconds() const { return static_cast<double>(ns) * 1e-9; }

  friend constexpr auto operator<=>(SimTime, SimTime) = default;
  friend constexpr SimTime operator+(SimTime a, SimTime b) {
    return b.ns > max().ns - a.ns ? max() : SimTime{a.ns + b.ns};
  }
  friend constexpr SimTime operator-(SimTime a, SimTime b) { return {a.ns - b.ns}; }
};

enum class EventKind : std::uint8_t {
  Wake,         // a sleeping device wakes and senses
  TxEnd,        // a data transmission leaves the air
  AckEnd,       // an ACK finished at its receiving device
  Timeout,      // ACK timeout expired
  Beacon,       // AP advertisement carrying (c*, y*)
  BackoffDone,  // baseline DCF backoff counter reached zero
  CycleEnd,     // renewal mode: end of a sleep-wake cycle
  EndOfSim,
};

inline std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Wake: return "wake";
    case EventKind::TxEnd: return "tx_end";
    case EventKind::AckEnd: return "ack_end";
    case EventKind::Timeout: return "timeout";
    case EventKind::Beacon: return "beacon";
    case EventKind::BackoffDone: return "backoff_done";
    case EventKind::CycleEnd: return "cycle_end";
    case EventKind::EndOfSim: return "end_of_sim";
  }
  return "unknown";
}

struct Event {
  SimTime time;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::EndOfSim;
  std::int32_t device = -1;
  std::int32_t ap = -1;
  // Lets the owner invalidate a pending event without removing it: an event
  // whose token no longer matches its owner's is stale and skipped.
  std::uint64_t token = 0;
};

class EventQueue {
 public:
  SimTime now() const { return now_; }
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  std::uint64_t processed() const { return processed_; }

  void schedule(Event e) {
    if (e.time < now_) {
      throw CausalityViolation("event at " + std::to_string(e.time.ns) + " ns scheduled before now (" +
                               std::to_string(now_.ns) + " ns)");
    }
    e.sequence = next_sequence_++;
    heap_.push(e);
  }

  void schedule(SimTime time, EventKind kind, std::int32_t device = -1, std::int32_t ap = -1,
                std::uint64_t token = 0) {
    schedule(Event{time, 0, kind, device, ap, token});
  }

  /// Pops the earliest event. An empty queue yields an EndOfSim sentinel at
  /// the current time.
  Event next() {
    if (heap_.empty()) return Event{now_, next_sequence_, EventKind::EndOfSim};
    Event e = heap_.top();
    heap_.pop();
    if (e.time < now_ || (e.time == now_ && e.sequence < last_sequence_ && processed_ > 0)) {
      throw std::logic_error("event queue delivered an event out of order");
    }
    now_ = e.time;
    last_sequence_ = e.sequence;
    ++processed_;
    return e;
  }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> heap_;
  SimTime now_{};
  std::uint64_t next_sequence_ = 0;
  std::uint64_t last_sequence_ = 0;
  std::uint64_t processed_ = 0;
};

inline constexpr std::string_view kPrngId = "xoshiro256**/splitmix64(seed,stream)";

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256** keyed by (master seed, stream id). The 256-bit state is
// filled from a splitmix64 sequence whose start mixes both keys, so a stream
// depends only on its own key and on how many draws it has made.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t master_seed, std::uint64_t stream_id) : stream_id_(stream_id) {
    std::uint64_t sm = master_seed;
    const std::uint64_t mixed = splitmix64(sm) ^ (stream_id * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL);
    std::uint64_t seeder = mixed;
    for (auto& word : s_) word = splitmix64(seeder);
  }

  std::uint64_t stream_id() const { return stream_id_; }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform in (0, 1].
  double uniform_open_closed() { return static_cast<double>(((*this)() >> 11) + 1) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n) {
    if (n == 0) throw InvalidArgument("uniform_below(0)");
    const std::uint64_t limit = max() - max() % n;
    std::uint64_t x;
    do x = (*this)();
    while (x >= limit);
    return x % n;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * (uniform_open_closed() - 0x1.0p-53); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
  std::uint64_t stream_id_;
};

/// Inverse CDF of the exponential law for u in (0, 1]; u = 1 maps to 0.
inline double exponential_from_uniform(double u, double rate) {
  if (!(rate > 0) || !std::isfinite(rate)) throw InvalidArgument("exponential rate must be finite and > 0");
  if (!(u > 0 && u <= 1)) throw InvalidArgument("uniform variate must lie in (0, 1]");
  return -std::log(u) / rate;
}

inline double sample_exponential(RandomStream& stream, double rate) {
  return exponential_from_uniform(stream.uniform_open_closed(), rate);
}

}  // namespace lifeadd
