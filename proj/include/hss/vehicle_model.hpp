#pragma once

#include <numbers>

namespace hss {

/// Kinematic state of one vehicle in the road frame. x runs along the road,
/// y is positive to the left, psi is the heading relative to the road axis.
struct VehicleState {
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double psi = 0.0;
  double speed = 0.0;  // |(vx, vy)|, kept consistent by make_state/step_kinematics

  /// Cosine of the direction of travel; falls back to cos(psi) at standstill.
  double travel_cos() const;
};

/// Builds a consistent state whose velocity points along psi + slip.
VehicleState make_state(double x, double y, double speed, double psi = 0.0, double slip = 0.0);

struct ControlInput {
  double accel = 0.0;     // m/s^2
  double steering = 0.0;  // rad, positive steers left
};

struct VehicleGeometry {
  double length = 5.0;
  double width = 2.0;
};

struct VehicleLimits {
  double a_min = -5.0;
  double a_max = 5.0;
  double steering_max = std::numbers::pi / 4.0;
  double v_abs_max = 40.0;
};

/// Slip angle at the centre of gravity, atan(tan(steering) / 2).
/// Throws std::domain_error when |steering| >= pi/2.
double slip_angle(double steering);

/// One explicit Euler step of the kinematic bicycle model.
///
/// Position advances with the velocity held at the start of the step. Speed
/// integrates the commanded acceleration and is clamped to [0, v_abs_max];
/// the velocity vector is then re-aligned with the new heading plus slip, so
/// with constant heading and slip vx changes by exactly a*cos(psi+beta)*dt.
VehicleState step_kinematics(const VehicleState& state, const ControlInput& control,
                             const VehicleGeometry& geometry, double dt, double v_abs_max);

struct SpeedRange {
  double lo = 0.0;
  double hi = 0.0;
};

/// Speeds reachable in one step from current_speed, intersected with [0, v_abs_max].
SpeedRange velocity_bounds(double current_speed, double a_min, double a_max, double dt,
                           double v_abs_max);

}  // namespace hss
