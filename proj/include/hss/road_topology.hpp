#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>

#include "hss/vehicle_model.hpp"

namespace hss {

using LaneIndex = int;

// Lane indices grow to the right. The highway lane is centred on y = 0 and the
// ramp runs parallel to it one lane width to the right.
inline constexpr LaneIndex kHighwayLane = 0;
inline constexpr LaneIndex kRampLane = 1;

inline constexpr double kNoGap = std::numeric_limits<double>::infinity();

struct RoadConfig {
  double entry_length = 220.0;
  double ramp_length = 100.0;
  double merge_length = 100.0;
  double exit_length = 1000.0;
  double lane_width = 4.0;
  double perception_range = 150.0;
  double lane_hysteresis = 0.2;  // fraction of lane_width
};

/// Straight two-lane merging road.
///
///   [0, entry)                   highway only
///   [entry, merge_start)         highway + ramp, not connected
///   [merge_start, merge_end]     highway + ramp, lane changes allowed
///   (merge_end, total]           highway only
class RoadLayout {
 public:
  RoadLayout() = default;
  explicit RoadLayout(const RoadConfig& config);

  double entry_length() const { return cfg_.entry_length; }
  double ramp_length() const { return cfg_.ramp_length; }
  double merge_length() const { return cfg_.merge_length; }
  double exit_length() const { return cfg_.exit_length; }
  double lane_width() const { return cfg_.lane_width; }
  double perception_range() const { return cfg_.perception_range; }
  double lane_hysteresis() const { return cfg_.lane_hysteresis; }

  double total_length() const;
  double ramp_start() const { return cfg_.entry_length; }
  double merge_start() const { return cfg_.entry_length + cfg_.ramp_length; }
  double merge_end() const { return merge_start() + cfg_.merge_length; }

  bool in_merge_section(double x) const;
  bool lane_exists(LaneIndex lane, double x) const;
  int lane_count_at(double x) const;
  double lane_center(LaneIndex lane) const;

  /// True when a vehicle at x may change between the two lanes.
  bool adjacent(LaneIndex a, LaneIndex b, double x) const;

  /// Lane reached by moving `offset` lanes (+1 right, -1 left), if adjacent at x.
  std::optional<LaneIndex> shifted_lane(LaneIndex lane, int offset, double x) const;

 private:
  RoadConfig cfg_{};
};

/// Validates segment lengths and builds the layout. Throws ConfigError.
RoadLayout build_merging_layout(const RoadConfig& config);

/// Read-only view of one vehicle for neighbour queries.
struct VehicleView {
  int id = 0;
  VehicleState state;
  VehicleGeometry geometry;
  LaneIndex lane = kHighwayLane;
};

/// Bumper-to-bumper distance; negative when the footprints overlap.
double longitudinal_gap(const VehicleView& rear, const VehicleView& front);

/// Lateral extent [y_lo, y_hi] of the rotated footprint.
std::pair<double, double> lateral_extent(const VehicleState& state, const VehicleGeometry& geometry);

/// Whether the footprint reaches into the lane corridor (lane must exist at x).
bool occupies_lane(const VehicleView& vehicle, LaneIndex lane, const RoadLayout& layout);

/// Lane whose centre is nearest to y among lanes existing at x.
LaneIndex nearest_lane(double x, double y, const RoadLayout& layout);

/// Lane membership with hysteresis: the vehicle switches lanes only once it is
/// within (0.5 - hysteresis) lane widths of the other lane's centre.
LaneIndex update_lane_membership(LaneIndex current, const VehicleState& state,
                                 const RoadLayout& layout);

struct Neighbor {
  int id = 0;
  std::size_t index = 0;  // position in the queried span
  double gap = kNoGap;
};

/// The three observed vehicles around an ego vehicle.
struct NeighborTopology {
  std::optional<Neighbor> leading;
  std::optional<Neighbor> target_leading;
  std::optional<Neighbor> target_rear;

  double gap_leading() const { return leading ? leading->gap : kNoGap; }
  double gap_target_leading() const { return target_leading ? target_leading->gap : kNoGap; }
  double gap_target_rear() const { return target_rear ? target_rear->gap : kNoGap; }
};

/// A vehicle belongs to a lane for neighbour purposes when it is a member of
/// it or its footprint reaches into the lane corridor.
bool in_lane(const VehicleView& vehicle, LaneIndex lane, const RoadLayout& layout);

std::optional<Neighbor> nearest_ahead(std::size_t ego, std::span<const VehicleView> vehicles,
                                      LaneIndex lane, const RoadLayout& layout);
std::optional<Neighbor> nearest_behind(std::size_t ego, std::span<const VehicleView> vehicles,
                                       LaneIndex lane, const RoadLayout& layout);

NeighborTopology identify_neighbors(std::size_t ego, std::span<const VehicleView> vehicles,
                                    const RoadLayout& layout, LaneIndex target_lane);

}  // namespace hss
