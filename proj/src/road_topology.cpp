#include "hss/road_topology.hpp"

#include <cmath>
#include <string>

#include "hss/errors.hpp"

namespace hss {

RoadLayout::RoadLayout(const RoadConfig& config) : cfg_(config) {}

double RoadLayout::total_length() const {
  return cfg_.entry_length + cfg_.ramp_length + cfg_.merge_length + cfg_.exit_length;
}

bool RoadLayout::in_merge_section(double x) const {
  return x >= merge_start() && x <= merge_end();
}

bool RoadLayout::lane_exists(LaneIndex lane, double x) const {
  if (lane == kHighwayLane) return true;
  if (lane == kRampLane) return x >= ramp_start() && x <= merge_end();
  return false;
}

int RoadLayout::lane_count_at(double x) const {
  return lane_exists(kRampLane, x) ? 2 : 1;
}

double RoadLayout::lane_center(LaneIndex lane) const {
  return -static_cast<double>(lane) * cfg_.lane_width;
}

bool RoadLayout::adjacent(LaneIndex a, LaneIndex b, double x) const {
  if (std::abs(a - b) != 1) return false;
  return lane_exists(a, x) && lane_exists(b, x) && in_merge_section(x);
}

std::optional<LaneIndex> RoadLayout::shifted_lane(LaneIndex lane, int offset, double x) const {
  if (offset == 0) return lane;
  const LaneIndex to = lane + offset;
  if (!adjacent(lane, to, x)) return std::nullopt;
  return to;
}

RoadLayout build_merging_layout(const RoadConfig& config) {
  const auto require_positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(std::string("road segment '") + name + "' must be positive");
  };
  require_positive(config.entry_length, "entry_length");
  require_positive(config.ramp_length, "ramp_length");
  require_positive(config.merge_length, "merge_length");
  require_positive(config.exit_length, "exit_length");
  require_positive(config.lane_width, "lane_width");
  require_positive(config.perception_range, "perception_range");
  if (config.lane_hysteresis < 0.0 || config.lane_hysteresis >= 0.5) {
    throw ConfigError("lane_hysteresis must lie in [0, 0.5)");
  }
  return RoadLayout(config);
}

double longitudinal_gap(const VehicleView& rear, const VehicleView& front) {
  return (front.state.x - rear.state.x) - 0.5 * front.geometry.length -
         0.5 * rear.geometry.length;
}

std::pair<double, double> lateral_extent(const VehicleState& state,
                                         const VehicleGeometry& geometry) {
  const double half = 0.5 * geometry.length * std::abs(std::sin(state.psi)) +
                      0.5 * geometry.width * std::abs(std::cos(state.psi));
  return {state.y - half, state.y + half};
}

bool occupies_lane(const VehicleView& vehicle, LaneIndex lane, const RoadLayout& layout) {
  if (!layout.lane_exists(lane, vehicle.state.x)) return false;
  const double half_w = 0.5 * layout.lane_width();
  const double c = layout.lane_center(lane);
  const auto [lo, hi] = lateral_extent(vehicle.state, vehicle.geometry);
  return hi > c - half_w && lo < c + half_w;
}

LaneIndex nearest_lane(double x, double y, const RoadLayout& layout) {
  LaneIndex best = kHighwayLane;
  double best_d = std::abs(y - layout.lane_center(kHighwayLane));
  if (layout.lane_exists(kRampLane, x)) {
    const double d = std::abs(y - layout.lane_center(kRampLane));
    if (d < best_d) best = kRampLane;
  }
  return best;
}

LaneIndex update_lane_membership(LaneIndex current, const VehicleState& state,
                                 const RoadLayout& layout) {
  const double capture = (0.5 - layout.lane_hysteresis()) * layout.lane_width();
  for (LaneIndex lane : {kHighwayLane, kRampLane}) {
    if (lane == current || !layout.lane_exists(lane, state.x)) continue;
    if (std::abs(state.y - layout.lane_center(lane)) < capture) return lane;
  }
  return current;
}

bool in_lane(const VehicleView& vehicle, LaneIndex lane, const RoadLayout& layout) {
  return vehicle.lane == lane || occupies_lane(vehicle, lane, layout);
}

namespace {

bool is_ahead(const VehicleView& ego, const VehicleView& other) {
  if (other.state.x != ego.state.x) return other.state.x > ego.state.x;
  return other.id > ego.id;
}

bool better(double d, int id, const std::optional<Neighbor>& current, double current_d) {
  if (!current) return true;
  if (d != current_d) return d < current_d;
  return id < current->id;
}

}  // namespace

std::optional<Neighbor> nearest_ahead(std::size_t ego, std::span<const VehicleView> vehicles,
                                      LaneIndex lane, const RoadLayout& layout) {
  const VehicleView& e = vehicles[ego];
  std::optional<Neighbor> best;
  double best_d = 0.0;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (i == ego) continue;
    const VehicleView& o = vehicles[i];
    if (!is_ahead(e, o) || !in_lane(o, lane, layout)) continue;
    const double d = o.state.x - e.state.x;
    if (d > layout.perception_range()) continue;
    if (better(d, o.id, best, best_d)) {
      best = Neighbor{o.id, i, longitudinal_gap(e, o)};
      best_d = d;
    }
  }
  return best;
}

std::optional<Neighbor> nearest_behind(std::size_t ego, std::span<const VehicleView> vehicles,
                                       LaneIndex lane, const RoadLayout& layout) {
  const VehicleView& e = vehicles[ego];
  std::optional<Neighbor> best;
  double best_d = 0.0;
  for (std::size_t i = 0; i < vehicles.size(); ++i) {
    if (i == ego) continue;
    const VehicleView& o = vehicles[i];
    if (is_ahead(e, o) || !in_lane(o, lane, layout)) continue;
    const double d = e.state.x - o.state.x;
    if (d > layout.perception_range()) continue;
    if (better(d, o.id, best, best_d)) {
      best = Neighbor{o.id, i, longitudinal_gap(o, e)};
      best_d = d;
    }
  }
  return best;
}

NeighborTopology identify_neighbors(std::size_t ego, std::span<const VehicleView> vehicles,
                                    const RoadLayout& layout, LaneIndex target_lane) {
  NeighborTopology topo;
  topo.leading = nearest_ahead(ego, vehicles, vehicles[ego].lane, layout);
  topo.target_leading = nearest_ahead(ego, vehicles, target_lane, layout);
  topo.target_rear = nearest_behind(ego, vehicles, target_lane, layout);
  return topo;
}

}  // namespace hss
