#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "hss/behavior.hpp"
#include "hss/qp_solver.hpp"
#include "hss/road_topology.hpp"
#include "hss/shield_config.hpp"
#include "hss/vehicle_model.hpp"

namespace hss {

/// Headway barrier h = gap - x_safe for one observed vehicle, together with the
/// affine row it induces on the ego velocity correction.
struct BarrierEvaluation {
  int leader_id = -1;
  double h = 0.0;
  AffineConstraint constraint;
  double safe_distance = 0.0;
  double buffer = 0.0;
};

/// Predicted barrier one motion step ahead when the ego moves at `ego_next_speed`
/// and the leader applies the worst-case acceleration.
///
/// The leader's predicted velocity is deliberately not clamped at zero: under
/// the explicit integrator the realised gap is then never smaller than the
/// prediction, whatever acceleration either vehicle actually applies.
double predicted_leading_barrier(const VehicleState& ego, double ego_next_speed,
                                 const VehicleState& leader, double gap,
                                 const ShieldConfig& config);

/// Discrete barrier condition h(t+1) + (eta - 1) h(t) >= 0 for the leading
/// vehicle, written as coeff * v_cbf <= rhs around the request v_ll.
BarrierEvaluation build_longitudinal_constraint(const VehicleState& ego, double v_ll,
                                                const VehicleState& leader, double gap,
                                                const ShieldConfig& config);

/// Whether the ego can take `ego_next_speed` now and then brake at a_min with
/// the leading-vehicle condition holding at every later step, while the leader
/// brakes at the worst case and travels up to `travel_angle_bound` off axis.
/// The current step's row is not part of the check.
bool braking_recoverable(const VehicleState& ego, double ego_next_speed,
                         const VehicleState& leader, double gap, const ShieldConfig& config);

/// Largest speed in `range` that is braking-recoverable, or range.lo when none is.
double recoverable_speed_limit(const VehicleState& ego, const VehicleState& leader, double gap,
                               SpeedRange range, const ShieldConfig& config);

struct LeaderObservation {
  int id = -1;
  VehicleState state;
  double gap = kNoGap;
};

struct LongitudinalResult {
  double a_requested = 0.0;  // a_ll clamped to [a_min, a_max]
  double a_safe = 0.0;
  double v_ll = 0.0;
  double v_cbf = 0.0;
  double slack = 0.0;
  double v_guard = std::numeric_limits<double>::infinity();  // recovery cap on the next speed
  QPStatus status = QPStatus::kOptimal;
  std::vector<BarrierEvaluation> barriers;

  bool corrected() const { return a_safe != a_requested; }
};

/// Filters a requested acceleration through the headway QP over every leader.
/// A finite `sight_gap` marks a lane with nothing in view: the recovery guard
/// then also treats a stopped vehicle at that gap as a leader. Without leaders
/// the request is only clamped to the acceleration limits.
LongitudinalResult shield_longitudinal(const VehicleState& ego,
                                       std::span<const LeaderObservation> leaders,
                                       double raw_accel, const ShieldConfig& config,
                                       double sight_gap = kNoGap);

struct LateralCheck {
  bool safe = true;
  double h_target_leading = std::numeric_limits<double>::infinity();
  double h_target_leading_next = std::numeric_limits<double>::infinity();
  double h_target_rear = std::numeric_limits<double>::infinity();
  double h_target_rear_next = std::numeric_limits<double>::infinity();
  bool target_leading_recoverable = true;
  bool target_rear_recoverable = true;
};

/// Lane-change rule: both target-lane barriers must be non-negative now and
/// satisfy the discrete invariance condition over the next step. Empty slots
/// pass. The rear barrier's safe distance uses the rear vehicle's speed. With
/// the recovery guard on, the ego must also be braking-recoverable behind the
/// target leader, and the rear vehicle behind the ego after its worst-case
/// acceleration.
LateralCheck evaluate_lane_change(const VehicleState& ego, const NeighborTopology& topology,
                                  std::span<const VehicleView> vehicles, double v_ll,
                                  const ShieldConfig& config);

bool lateral_safe_to_change(const VehicleState& ego, const NeighborTopology& topology,
                            std::span<const VehicleView> vehicles, double v_ll,
                            const ShieldConfig& config);

struct ShieldRequest {
  std::size_t ego = 0;
  std::span<const VehicleView> vehicles;
  const RoadLayout* layout = nullptr;
  ControlInput raw;
  LaneIndex target_lane = kHighwayLane;
  const ShieldConfig* shield = nullptr;
  const ControllerConfig* controller = nullptr;
  VehicleLimits limits;
};

struct ShieldOutcome {
  ControlInput safe;
  bool lane_change_requested = false;
  bool lane_change_committed = false;
  bool lateral_veto = false;
  NeighborTopology topology;
  LateralCheck lateral;
  LongitudinalResult longitudinal;
};

/// Full hybrid shield for one vehicle and one motion step. Reads only the
/// immutable snapshot in the request.
///
/// Steering passes through while lane keeping or while the lane-change rule
/// holds; otherwise it is replaced by lane-keeping steering toward the current
/// lane centre. The longitudinal QP stacks one row per lane the ego occupies,
/// plus the target lane during a committed change.
ShieldOutcome shield(const ShieldRequest& request);

/// Leaders the longitudinal QP must respect, one per relevant lane, deduplicated.
/// `blind_lane` is set when some relevant lane has no leader in range.
std::vector<LeaderObservation> relevant_leaders(std::size_t ego,
                                                std::span<const VehicleView> vehicles,
                                                const RoadLayout& layout,
                                                std::span<const LaneIndex> extra_lanes,
                                                bool* blind_lane = nullptr);

}  // namespace hss
