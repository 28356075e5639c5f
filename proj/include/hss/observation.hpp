#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hss/road_topology.hpp"

namespace hss {

// is_present, x, y, vx, vy, psi
inline constexpr std::size_t kVehicleFeatures = 6;
inline constexpr std::size_t kDefaultObservedVehicles = 5;

/// Flat per-agent observation: the ego block in the global frame followed by
/// a fixed number of observed-vehicle blocks relative to the ego. Absent
/// slots are all zero.
struct Observation {
  std::vector<double> values;

  std::size_t blocks() const { return values.size() / kVehicleFeatures; }
  std::span<const double> block(std::size_t i) const {
    return std::span<const double>(values).subspan(i * kVehicleFeatures, kVehicleFeatures);
  }
};

/// Other vehicles within perception range of `ego`, ordered by absolute
/// longitudinal distance then id, truncated to `max_count`.
std::vector<std::size_t> observed_indices(std::size_t ego, std::span<const VehicleView> vehicles,
                                          double perception_range, std::size_t max_count);

Observation build_observation(std::size_t ego, std::span<const VehicleView> vehicles,
                              double perception_range, std::size_t observed_count);

}  // namespace hss
