#include "hss/safety_shield.hpp"

#include <algorithm>
#include <cmath>

namespace hss {

namespace {

double worst_case_next_vx(const VehicleState& other, double accel, double dt) {
  return other.vx + accel * dt;
}

}  // namespace

double predicted_leading_barrier(const VehicleState& ego, double ego_next_speed,
                                 const VehicleState& leader, double gap,
                                 const ShieldConfig& config) {
  const double c = ego.travel_cos();
  const double leader_vx = worst_case_next_vx(leader, config.worst_case_leader_accel, config.dt);
  const double next_gap = gap + (leader_vx - c * ego_next_speed) * config.dt;
  return next_gap - safe_distance(ego_next_speed, config).x_safe;
}

BarrierEvaluation build_longitudinal_constraint(const VehicleState& ego, double v_ll,
                                                const VehicleState& leader, double gap,
                                                const ShieldConfig& config) {
  const SafeDistance sd = safe_distance(ego.speed, config);
  BarrierEvaluation eval;
  eval.h = gap - sd.x_safe;
  eval.safe_distance = sd.x_safe;
  eval.buffer = sd.x_buff;

  // predicted(v_ll + u) = predicted(v_ll) - (c*dt + tau) * u, so the barrier
  // condition predicted(v_ll + u) >= (1 - eta) * h becomes coeff * u <= rhs.
  const double coeff = ego.travel_cos() * config.dt + config.tau;
  const double at_request = predicted_leading_barrier(ego, v_ll, leader, gap, config);
  eval.constraint.coeffs = {coeff};
  eval.constraint.rhs = at_request - (1.0 - config.eta) * eval.h;
  return eval;
}

bool braking_recoverable(const VehicleState& ego, double ego_next_speed,
                         const VehicleState& leader, double gap, const ShieldConfig& config) {
  const double dt = config.dt;
  const double keep = 1.0 - config.eta;
  const double brake = -config.a_min;
  const double leader_dv = config.worst_case_leader_accel * dt;
  const double buff = safe_distance(0.0, config).x_buff;
  const double lean = std::cos(config.travel_angle_bound);

  // Realised state after this step: the gap moves with the current velocities.
  double g = gap + (leader.vx - ego.vx) * dt;
  double ve = ego_next_speed;
  double vl_speed = std::max(0.0, leader.speed + leader_dv);
  const int horizon = static_cast<int>(std::ceil((config.v_abs_max + ve) / (brake * dt))) + 2;
  for (int k = 0; k < horizon; ++k) {
    const double vl = lean * vl_speed;
    const double h = g - config.tau * ve - buff;
    // Every later row holds if h stays large while the ego brakes to a stop.
    const double shrink = ve * dt + ve * ve / (2.0 * brake);
    if (config.eta * (h - shrink) >= (ve - leader_dv) * dt) return true;

    const double ve_next = std::max(0.0, ve - brake * dt);
    const double predicted = g + (vl + leader_dv - ve_next) * dt - config.tau * ve_next - buff;
    if (predicted - keep * h < 0.0) return false;
    if (ve == 0.0 && vl_speed == 0.0) return true;
    g += (vl - ve) * dt;
    ve = ve_next;
    vl_speed = std::max(0.0, vl_speed + leader_dv);
  }
  return true;
}

double recoverable_speed_limit(const VehicleState& ego, const VehicleState& leader, double gap,
                               SpeedRange range, const ShieldConfig& config) {
  if (braking_recoverable(ego, range.hi, leader, gap, config)) return range.hi;
  if (!braking_recoverable(ego, range.lo, leader, gap, config)) return range.lo;
  double lo = range.lo;
  double hi = range.hi;
  while (hi - lo > 1e-9) {
    const double mid = 0.5 * (lo + hi);
    (braking_recoverable(ego, mid, leader, gap, config) ? lo : hi) = mid;
  }
  return lo;
}

LongitudinalResult shield_longitudinal(const VehicleState& ego,
                                       std::span<const LeaderObservation> leaders,
                                       double raw_accel, const ShieldConfig& config,
                                       double sight_gap) {
  LongitudinalResult out;
  out.a_requested = std::clamp(raw_accel, config.a_min, config.a_max);
  out.a_safe = out.a_requested;
  out.v_ll = ego.speed + out.a_requested * config.dt;
  const bool sight_limited = config.recovery_guard && std::isfinite(sight_gap);
  if (leaders.empty() && !sight_limited) return out;

  ShieldQP qp;
  qp.slack_penalty = config.slack_penalty;
  const SpeedRange range =
      velocity_bounds(ego.speed, config.a_min, config.a_max, config.dt, config.v_abs_max);
  out.barriers.reserve(leaders.size());
  double cap = range.hi;
  if (sight_limited) {
    // Anything that comes into view next step lies beyond this stopped vehicle.
    cap = recoverable_speed_limit(ego, VehicleState{}, sight_gap, range, config);
    out.v_guard = cap;
  }
  for (const auto& leader : leaders) {
    if (config.recovery_guard) {
      cap = std::min(cap, recoverable_speed_limit(ego, leader.state, leader.gap, range, config));
      out.v_guard = cap;
    }
    BarrierEvaluation eval =
        build_longitudinal_constraint(ego, out.v_ll, leader.state, leader.gap, config);
    eval.leader_id = leader.id;
    qp.rows.push_back(eval.constraint);
    out.barriers.push_back(std::move(eval));
  }

  // Requests past the speed limits are realised as the limit by the integrator,
  // so they stay admissible unless the recovery cap binds.
  const double lo = std::min(range.lo, out.v_ll);
  const double hi = cap < range.hi ? cap : std::max(range.hi, out.v_ll);
  qp.lower = {lo - out.v_ll};
  qp.upper = {hi - out.v_ll};

  const QPSolution sol = solve_shield_qp(qp);
  out.v_cbf = sol.u[0];
  out.slack = sol.slack;
  out.status = sol.status;
  if (out.v_cbf != 0.0) {
    const double v_safe = out.v_ll + out.v_cbf;
    out.a_safe = std::clamp((v_safe - ego.speed) / config.dt, config.a_min, config.a_max);
  }
  return out;
}

LateralCheck evaluate_lane_change(const VehicleState& ego, const NeighborTopology& topology,
                                  std::span<const VehicleView> vehicles, double v_ll,
                                  const ShieldConfig& config) {
  LateralCheck check;
  const double keep = 1.0 - config.eta;
  const double c = ego.travel_cos();

  if (topology.target_leading) {
    const VehicleState& lead = vehicles[topology.target_leading->index].state;
    const double gap = topology.target_leading->gap;
    check.h_target_leading = gap - safe_distance(ego.speed, config).x_safe;
    check.h_target_leading_next = predicted_leading_barrier(ego, v_ll, lead, gap, config);
    check.safe = check.safe && check.h_target_leading >= 0.0 &&
                 check.h_target_leading_next - keep * check.h_target_leading >= 0.0;
    if (config.recovery_guard) {
      const SpeedRange range =
          velocity_bounds(ego.speed, config.a_min, config.a_max, config.dt, config.v_abs_max);
      check.target_leading_recoverable = braking_recoverable(ego, range.lo, lead, gap, config);
      check.safe = check.safe && check.target_leading_recoverable;
    }
  }
  if (topology.target_rear) {
    const VehicleState& rear = vehicles[topology.target_rear->index].state;
    const double gap = topology.target_rear->gap;
    const double rear_next_speed = rear.speed + config.worst_case_rear_accel * config.dt;
    const double rear_next_vx = worst_case_next_vx(rear, config.worst_case_rear_accel, config.dt);
    const double next_gap = gap + (c * v_ll - rear_next_vx) * config.dt;
    check.h_target_rear = gap - safe_distance(rear.speed, config).x_safe;
    check.h_target_rear_next = next_gap - safe_distance(rear_next_speed, config).x_safe;
    check.safe = check.safe && check.h_target_rear >= 0.0 &&
                 check.h_target_rear_next - keep * check.h_target_rear >= 0.0;
    if (config.recovery_guard) {
      const double worst = std::min(config.v_abs_max, rear_next_speed);
      check.target_rear_recoverable = braking_recoverable(rear, worst, ego, gap, config);
      check.safe = check.safe && check.target_rear_recoverable;
    }
  }
  return check;
}

bool lateral_safe_to_change(const VehicleState& ego, const NeighborTopology& topology,
                            std::span<const VehicleView> vehicles, double v_ll,
                            const ShieldConfig& config) {
  return evaluate_lane_change(ego, topology, vehicles, v_ll, config).safe;
}

std::vector<LeaderObservation> relevant_leaders(std::size_t ego,
                                                std::span<const VehicleView> vehicles,
                                                const RoadLayout& layout,
                                                std::span<const LaneIndex> extra_lanes,
                                                bool* blind_lane) {
  const VehicleView& e = vehicles[ego];
  std::vector<LaneIndex> lanes{e.lane};
  lanes.insert(lanes.end(), extra_lanes.begin(), extra_lanes.end());
  for (LaneIndex lane : {kHighwayLane, kRampLane}) {
    if (occupies_lane(e, lane, layout)) lanes.push_back(lane);
  }
  std::sort(lanes.begin(), lanes.end());
  lanes.erase(std::unique(lanes.begin(), lanes.end()), lanes.end());

  std::vector<LeaderObservation> out;
  if (blind_lane) *blind_lane = false;
  for (LaneIndex lane : lanes) {
    const auto n = nearest_ahead(ego, vehicles, lane, layout);
    if (!n) {
      if (blind_lane) *blind_lane = true;
      continue;
    }
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const LeaderObservation& l) { return l.id == n->id; });
    if (!seen) out.push_back(LeaderObservation{n->id, vehicles[n->index].state, n->gap});
  }
  return out;
}

ShieldOutcome shield(const ShieldRequest& req) {
  const VehicleView& ego = req.vehicles[req.ego];
  const ShieldConfig& cfg = *req.shield;

  ShieldOutcome out;
  out.topology = identify_neighbors(req.ego, req.vehicles, *req.layout, req.target_lane);
  out.lane_change_requested = req.target_lane != ego.lane;

  const double a_ll = std::clamp(req.raw.accel, cfg.a_min, cfg.a_max);
  const double v_ll = ego.state.speed + a_ll * cfg.dt;

  double steering = req.raw.steering;
  if (out.lane_change_requested) {
    out.lateral = evaluate_lane_change(ego.state, out.topology, req.vehicles, v_ll, cfg);
    if (out.lateral.safe) {
      out.lane_change_committed = true;
    } else {
      out.lateral_veto = true;
      steering = lane_keep_steering(ego.state, req.layout->lane_center(ego.lane),
                                    *req.controller, ego.geometry, req.limits, cfg.dt);
    }
  }

  std::vector<LaneIndex> extra;
  if (out.lane_change_committed) extra.push_back(req.target_lane);
  bool blind = false;
  const auto leaders = relevant_leaders(req.ego, req.vehicles, *req.layout, extra, &blind);
  // Range is measured between centres; a newly visible vehicle of the same
  // length can sit one length closer in bumper gap.
  const double sight = blind ? req.layout->perception_range() - ego.geometry.length : kNoGap;
  out.longitudinal = shield_longitudinal(ego.state, leaders, req.raw.accel, cfg, sight);

  out.safe.accel = out.longitudinal.a_safe;
  out.safe.steering = std::clamp(steering, -req.limits.steering_max, req.limits.steering_max);
  return out;
}

}  // namespace hss
