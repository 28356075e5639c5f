#include "hss/observation.hpp"

#include <algorithm>
#include <cmath>

namespace hss {

std::vector<std::size_t> observed_indices(std::size_t ego, std::span<const VehicleView> vehicles,
                                          double perception_range, std::size_t max_count) {
  const double ex = vehicles[ego].state.x;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (i == ego) continue;
    if (std::abs(vehicles[i].state.x - ex) <= perception_range) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double da = std::abs(vehicles[a].state.x - ex);
    const double db = std::abs(vehicles[b].state.x - ex);
    if (da != db) return da < db;
    return vehicles[a].id < vehicles[b].id;
  });
  if (idx.size() > max_count) idx.resize(max_count);
  return idx;
}

Observation build_observation(std::size_t ego, std::span<const VehicleView> vehicles,
                              double perception_range, std::size_t observed_count) {
  Observation obs;
  obs.values.assign((observed_count + 1) * kVehicleFeatures, 0.0);
  const VehicleState& e = vehicles[ego].state;
  double* out = obs.values.data();
  out[0] = 1.0;
  out[1] = e.x;
  out[2] = e.y;
  out[3] = e.vx;
  out[4] = e.vy;
  out[5] = e.psi;
  const auto seen = observed_indices(ego, vehicles, perception_range, observed_count);
  for (std::size_t k = 0; k < seen.size(); ++k) {
    const VehicleState& o = vehicles[seen[k]].state;
    double* b = out + (k + 1) * kVehicleFeatures;
    b[0] = 1.0;
    b[1] = o.x - e.x;
    b[2] = o.y - e.y;
    b[3] = o.vx - e.vx;
    b[4] = o.vy - e.vy;
    b[5] = o.psi - e.psi;
  }
  return obs;
}

}  // namespace hss
