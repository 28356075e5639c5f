#pragma once

namespace hss {

/// Safety parameters shared by every vehicle's shield.
struct ShieldConfig {
  double tau = 0.5;            // safe time headway (s)
  double eta = 0.0325;         // zero-order coefficient of the barrier condition
  double slack_penalty = 1e4;  // K_eps
  double a_min = -5.0;
  double a_max = 5.0;
  double dt = 1.0 / 15.0;      // motion-planning step (s)
  double worst_case_leader_accel = -5.0;  // assumed for leading / target-leading vehicles
  double worst_case_rear_accel = 5.0;     // assumed for the target-rear vehicle
  double headway_floor = 0.001;           // hard proximity band on h (m)
  double v_abs_max = 40.0;
  double buffer_accel_margin = 0.1;       // added to a_max in the buffer distance
  // Cap the next speed so that braking at a_min keeps every later barrier row
  // satisfiable against a leader braking at the worst case.
  bool recovery_guard = true;
  double travel_angle_bound = 0.3;        // |direction of travel| bound assumed for leaders (rad)
};

/// Throws ConfigError unless 0 < eta <= 1, tau > 0, dt > 0, a_min < 0 < a_max
/// and the remaining fields are sane.
void validate(const ShieldConfig& config);

struct SafeDistance {
  double x_safe = 0.0;
  double x_buff = 0.0;
};

/// x_buff = (a_max + 0.1) * dt * tau;  x_safe = tau * speed + x_buff.
SafeDistance safe_distance(double speed, const ShieldConfig& config);

}  // namespace hss
