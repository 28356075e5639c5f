#include "hss/shield_config.hpp"

#include <cmath>

#include "hss/errors.hpp"

namespace hss {

void validate(const ShieldConfig& c) {
  if (!(c.eta > 0.0 && c.eta <= 1.0)) throw ConfigError("shield: eta must lie in (0, 1]");
  if (!(c.tau > 0.0)) throw ConfigError("shield: tau must be positive");
  if (!(c.dt > 0.0)) throw ConfigError("shield: dt must be positive");
  if (!(c.a_min < 0.0 && 0.0 < c.a_max)) throw ConfigError("shield: need a_min < 0 < a_max");
  if (!(c.slack_penalty > 0.0)) throw ConfigError("shield: slack_penalty must be positive");
  if (!(c.v_abs_max > 0.0)) throw ConfigError("shield: v_abs_max must be positive");
  if (!(c.headway_floor >= 0.0)) throw ConfigError("shield: headway_floor must be non-negative");
  if (!std::isfinite(c.worst_case_leader_accel) || !std::isfinite(c.worst_case_rear_accel)) {
    throw ConfigError("shield: worst-case accelerations must be finite");
  }
  if (!(c.travel_angle_bound >= 0.0 && c.travel_angle_bound < 1.5)) {
    throw ConfigError("shield: travel_angle_bound must lie in [0, 1.5)");
  }
}

SafeDistance safe_distance(double speed, const ShieldConfig& c) {
  SafeDistance d;
  d.x_buff = (c.a_max + c.buffer_accel_margin) * c.dt * c.tau;
  d.x_safe = c.tau * speed + d.x_buff;
  return d;
}

}  // namespace hss
