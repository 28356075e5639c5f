#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hss/observation.hpp"
#include "hss/road_topology.hpp"
#include "hss/shield_config.hpp"
#include "hss/vehicle_model.hpp"

namespace hss {

enum class BehaviouralAction : int { kRight = 0, kLeft = 1, kFollowLane = 2, kSpeedUp = 3, kSlowDown = 4 };

inline constexpr int kActionCount = 5;

/// Throws std::out_of_range for indices outside [0, 5).
BehaviouralAction action_from_index(int index);
int to_index(BehaviouralAction action);
const char* to_string(BehaviouralAction action);

struct ControllerConfig {
  double k_v = 2.0;             // speed tracking gain (1/s)
  double k_y = 1.0 / 0.6;       // lateral position gain (1/s)
  double v_floor = 1.0;         // speed floor for heading scheduling (m/s)
  double speed_step = 2.0;      // target change per SPEED_UP / SLOW_DOWN (m/s)
  double max_travel_angle = 0.3;  // cap on the commanded direction of travel (rad)
};

struct DrivingTarget {
  LaneIndex lane = kHighwayLane;
  double speed = 0.0;
};

/// Maps a behavioural action onto lane and speed references. Lane shifts that
/// do not land on an adjacent lane at x degrade to FOLLOW_LANE.
DrivingTarget decode_action(BehaviouralAction action, const DrivingTarget& current, double x,
                            const RoadLayout& layout, double speed_step, double v_abs_max);

/// a_ll = k_v * (target - speed), clamped to [a_min, a_max].
double speed_tracking_accel(const VehicleState& state, double target_speed, double k_v,
                            const VehicleLimits& limits);

/// Cascaded lateral controller. A proportional law on the lateral offset sets
/// a desired lateral speed; the corresponding direction of travel is reached
/// in one step by solving the bicycle heading update for the slip angle.
double lane_keep_steering(const VehicleState& state, double target_y,
                          const ControllerConfig& config, const VehicleGeometry& geometry,
                          const VehicleLimits& limits, double dt);

/// What a policy may look at when choosing an action for one vehicle.
struct PolicyInput {
  const Observation* observation = nullptr;
  VehicleState state;
  LaneIndex lane = kHighwayLane;
  const RoadLayout* layout = nullptr;
  const ShieldConfig* shield = nullptr;
  NeighborTopology left;          // neighbours in the lane to the left, if any
  bool left_exists = false;
  double left_rear_speed = 0.0;   // speed of left.target_rear when present
};

/// Per-vehicle behavioural policy. Implementations may keep rng state and must
/// not be shared between vehicles.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual BehaviouralAction act(const PolicyInput& input) = 0;
  virtual std::string name() const = 0;
};

/// Names accepted by make_policy.
std::vector<std::string> policy_names();

/// Throws std::invalid_argument for unknown names.
std::unique_ptr<Policy> make_policy(const std::string& name, std::uint64_t seed);

}  // namespace hss
