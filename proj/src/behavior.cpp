#include "hss/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hss {

BehaviouralAction action_from_index(int index) {
  if (index < 0 || index >= kActionCount) throw std::out_of_range("behavioural action index");
  return static_cast<BehaviouralAction>(index);
}

int to_index(BehaviouralAction action) { return static_cast<int>(action); }

const char* to_string(BehaviouralAction action) {
  switch (action) {
    case BehaviouralAction::kRight: return "RIGHT";
    case BehaviouralAction::kLeft: return "LEFT";
    case BehaviouralAction::kFollowLane: return "FOLLOW_LANE";
    case BehaviouralAction::kSpeedUp: return "SPEED_UP";
    case BehaviouralAction::kSlowDown: return "SLOW_DOWN";
  }
  return "UNKNOWN";
}

DrivingTarget decode_action(BehaviouralAction action, const DrivingTarget& current, double x,
                            const RoadLayout& layout, double speed_step, double v_abs_max) {
  DrivingTarget next = current;
  switch (action) {
    case BehaviouralAction::kRight:
      next.lane = layout.shifted_lane(current.lane, +1, x).value_or(current.lane);
      break;
    case BehaviouralAction::kLeft:
      next.lane = layout.shifted_lane(current.lane, -1, x).value_or(current.lane);
      break;
    case BehaviouralAction::kSpeedUp:
      next.speed = std::clamp(current.speed + speed_step, 0.0, v_abs_max);
      break;
    case BehaviouralAction::kSlowDown:
      next.speed = std::clamp(current.speed - speed_step, 0.0, v_abs_max);
      break;
    case BehaviouralAction::kFollowLane:
      break;
  }
  return next;
}

double speed_tracking_accel(const VehicleState& state, double target_speed, double k_v,
                            const VehicleLimits& limits) {
  return std::clamp(k_v * (target_speed - state.speed), limits.a_min, limits.a_max);
}

double lane_keep_steering(const VehicleState& state, double target_y,
                          const ControllerConfig& config, const VehicleGeometry& geometry,
                          const VehicleLimits& limits, double dt) {
  const double v_ref = std::max(state.speed, config.v_floor);
  const double sin_cap = std::sin(config.max_travel_angle);
  const double lateral_speed = config.k_y * (target_y - state.y);
  const double travel = std::asin(std::clamp(lateral_speed / v_ref, -sin_cap, sin_cap));

  // Travel direction after one step is psi + c*sin(beta) + beta; the left side
  // is monotone in beta, so a few Newton iterations pin it down.
  const double c = 2.0 * state.speed * dt / geometry.length;
  const double beta_max = slip_angle(limits.steering_max);
  const auto turn = [c](double b) { return c * std::sin(b) + b; };
  const double want = std::clamp(travel - state.psi, turn(-beta_max), turn(beta_max));
  double beta = want / (1.0 + c);
  for (int it = 0; it < 8; ++it) {
    beta -= (turn(beta) - want) / (c * std::cos(beta) + 1.0);
  }
  beta = std::clamp(beta, -beta_max, beta_max);
  const double steering = std::atan(2.0 * std::tan(beta));
  return std::clamp(steering, -limits.steering_max, limits.steering_max);
}

namespace {

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  BehaviouralAction act(const PolicyInput&) override {
    return action_from_index(std::uniform_int_distribution<int>(0, kActionCount - 1)(rng_));
  }
  std::string name() const override { return "random"; }

 private:
  std::mt19937_64 rng_;
};

class KeepLaneCruise final : public Policy {
 public:
  BehaviouralAction act(const PolicyInput&) override { return BehaviouralAction::kFollowLane; }
  std::string name() const override { return "keep_lane_cruise"; }
};

class AggressiveMerger final : public Policy {
 public:
  BehaviouralAction act(const PolicyInput& in) override {
    if (in.layout->in_merge_section(in.state.x)) return BehaviouralAction::kLeft;
    return BehaviouralAction::kSpeedUp;
  }
  std::string name() const override { return "aggressive_merger"; }
};

class ShyMerger final : public Policy {
 public:
  BehaviouralAction act(const PolicyInput& in) override {
    if (in.lane != kRampLane || !in.layout->in_merge_section(in.state.x) || !in.left_exists) {
      return BehaviouralAction::kFollowLane;
    }
    const double ego_safe = safe_distance(in.state.speed, *in.shield).x_safe;
    const double rear_safe = safe_distance(in.left_rear_speed, *in.shield).x_safe;
    const bool ahead_ok = in.left.gap_target_leading() > 2.0 * ego_safe;
    const bool behind_ok = in.left.gap_target_rear() > 2.0 * rear_safe;
    return ahead_ok && behind_ok ? BehaviouralAction::kLeft : BehaviouralAction::kFollowLane;
  }
  std::string name() const override { return "shy_merger"; }
};

}  // namespace

std::vector<std::string> policy_names() {
  return {"random", "keep_lane_cruise", "aggressive_merger", "shy_merger"};
}

std::unique_ptr<Policy> make_policy(const std::string& name, std::uint64_t seed) {
  if (name == "random") return std::make_unique<RandomPolicy>(seed);
  if (name == "keep_lane_cruise") return std::make_unique<KeepLaneCruise>();
  if (name == "aggressive_merger") return std::make_unique<AggressiveMerger>();
  if (name == "shy_merger") return std::make_unique<ShyMerger>();
  throw std::invalid_argument("unknown policy '" + name + "'");
}

}  // namespace hss
