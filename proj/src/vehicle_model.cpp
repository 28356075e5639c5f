#include "hss/vehicle_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hss {

double VehicleState::travel_cos() const {
  if (speed > 0.0) return vx / speed;
  return std::cos(psi);
}

VehicleState make_state(double x, double y, double speed, double psi, double slip) {
  VehicleState s;
  s.x = x;
  s.y = y;
  s.psi = psi;
  s.speed = std::max(0.0, speed);
  s.vx = s.speed * std::cos(psi + slip);
  s.vy = s.speed * std::sin(psi + slip);
  return s;
}

double slip_angle(double steering) {
  if (!(std::abs(steering) < std::numbers::pi / 2.0)) {
    throw std::domain_error("slip_angle: |steering| must be below pi/2");
  }
  return std::atan(0.5 * std::tan(steering));
}

VehicleState step_kinematics(const VehicleState& state, const ControlInput& control,
                             const VehicleGeometry& geometry, double dt, double v_abs_max) {
  const double beta = slip_angle(control.steering);

  VehicleState next;
  next.x = state.x + state.vx * dt;
  next.y = state.y + state.vy * dt;
  next.psi = state.psi + (2.0 * state.speed / geometry.length) * std::sin(beta) * dt;
  next.speed = std::clamp(state.speed + control.accel * dt, 0.0, v_abs_max);
  next.vx = next.speed * std::cos(next.psi + beta);
  next.vy = next.speed * std::sin(next.psi + beta);
  return next;
}

SpeedRange velocity_bounds(double current_speed, double a_min, double a_max, double dt,
                           double v_abs_max) {
  SpeedRange r;
  r.lo = std::clamp(current_speed + a_min * dt, 0.0, v_abs_max);
  r.hi = std::clamp(current_speed + a_max * dt, 0.0, v_abs_max);
  return r;
}

}  // namespace hss
