#pragma once

// Disc-model connectivity between devices and APs. Every relation is a
// distance test against one of three radii; asymmetry between device->AP
// pairs (one device reaching a foreign AP while the other does not) is what
// produces near-far starvation.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "lifeadd/error.hpp"

namespace lifeadd {

struct Position {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Ranges {
  double sensing = 110.0;
  double interference = 110.0;
  double communication = 110.0;
};

class Topology {
 public:
  Topology() = default;

  std::size_t device_count() const { return devices_.size(); }
  std::size_t ap_count() const { return aps_.size(); }
  const Ranges& ranges() const { return ranges_; }
  Position device_position(std::size_t d) const { return devices_[d]; }
  Position ap_position(std::size_t a) const { return aps_[a]; }

  /// Device-to-device carrier sensing (symmetric).
  bool senses(std::size_t d1, std::size_t d2) const { return dev_dev_sense_[d1 * devices_.size() + d2]; }
  /// Device d can hear frames sent by AP a (used for ACK audibility).
  bool senses_ap(std::size_t d, std::size_t a) const { return dev_ap_sense_[d * aps_.size() + a]; }
  /// A transmission from device d corrupts reception at AP a.
  bool interferes_at(std::size_t d, std::size_t a) const { return dev_ap_intf_[d * aps_.size() + a]; }
  /// A transmission from device d1 corrupts reception at device d2.
  bool interferes_at_device(std::size_t d1, std::size_t d2) const {
    return d1 != d2 && distance(devices_[d1], devices_[d2]) <= ranges_.interference;
  }
  /// An ACK from AP a1 corrupts reception at AP a2.
  bool ap_interferes_at_ap(std::size_t a1, std::size_t a2) const {
    return a1 != a2 && distance(aps_[a1], aps_[a2]) <= ranges_.interference;
  }
  /// An ACK from AP a corrupts reception at device d.
  bool ap_interferes_at_device(std::size_t a, std::size_t d) const {
    return distance(aps_[a], devices_[d]) <= ranges_.interference;
  }
  std::size_t associated_ap(std::size_t d) const { return association_[d]; }
  /// APs whose beacons device d receives, ascending.
  const std::vector<std::size_t>& hears_beacons(std::size_t d) const { return beacons_[d]; }
  /// Devices within AP a's communication range, ascending.
  const std::vector<std::size_t>& devices_in_range(std::size_t a) const { return in_range_[a]; }
  /// Sensing neighbours of device d (excluding d).
  const std::vector<std::size_t>& sensing_neighbours(std::size_t d) const { return neighbours_[d]; }

  bool sensing_complete() const {
    for (std::size_t d = 0; d < devices_.size(); ++d) {
      if (neighbours_[d].size() + 1 != devices_.size()) return false;
    }
    return true;
  }

  friend Topology build_topology(std::vector<Position> aps, std::vector<Position> devices, Ranges ranges);

 private:
  std::vector<Position> aps_, devices_;
  Ranges ranges_;
  std::vector<bool> dev_dev_sense_, dev_ap_sense_, dev_ap_intf_;
  std::vector<std::size_t> association_;
  std::vector<std::vector<std::size_t>> beacons_, in_range_, neighbours_;
};

/// Builds every relation. Each device associates with the nearest AP in
/// communication range (lowest index on ties).
inline Topology build_topology(std::vector<Position> aps, std::vector<Position> devices, Ranges ranges) {
  if (aps.empty()) throw InvalidArgument("topology has no APs");
  if (!(ranges.sensing >= 0 && ranges.interference >= 0 && ranges.communication >= 0)) {
    throw InvalidArgument("ranges must be >= 0");
  }
  Topology t;
  t.aps_ = std::move(aps);
  t.devices_ = std::move(devices);
  t.ranges_ = ranges;
  const std::size_t n = t.devices_.size(), m = t.aps_.size();
  t.dev_dev_sense_.assign(n * n, false);
  t.dev_ap_sense_.assign(n * m, false);
  t.dev_ap_intf_.assign(n * m, false);
  t.association_.assign(n, 0);
  t.beacons_.assign(n, {});
  t.in_range_.assign(m, {});
  t.neighbours_.assign(n, {});

  for (std::size_t d = 0; d < n; ++d) {
    for (std::size_t e = 0; e < n; ++e) {
      if (d != e && distance(t.devices_[d], t.devices_[e]) <= ranges.sensing) {
        t.dev_dev_sense_[d * n + e] = true;
        t.neighbours_[d].push_back(e);
      }
    }
    double best = 0.0;
    bool associated = false;
    for (std::size_t a = 0; a < m; ++a) {
      const double dist = distance(t.devices_[d], t.aps_[a]);
      t.dev_ap_sense_[d * m + a] = dist <= ranges.sensing;
      t.dev_ap_intf_[d * m + a] = dist <= ranges.interference;
      if (dist <= ranges.communication) {
        t.beacons_[d].push_back(a);
        t.in_range_[a].push_back(d);
        if (!associated || dist < best) {
          best = dist;
          t.association_[d] = a;
          associated = true;
        }
      }
    }
    if (!associated) {
      throw UnassociatedDevice("device " + std::to_string(d) + " is outside every AP's communication range");
    }
  }
  return t;
}

}  // namespace lifeadd
