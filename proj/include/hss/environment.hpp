#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "hss/behavior.hpp"
#include "hss/observation.hpp"
#include "hss/road_topology.hpp"
#include "hss/safety_shield.hpp"
#include "hss/scenario_config.hpp"
#include "hss/vehicle_model.hpp"

namespace hss {

enum class VehicleStatus { kActive, kCrashed, kExited, kFailedMerge };

const char* to_string(VehicleStatus status);

/// One record per (vehicle, motion sub-step). `state` and `headway` describe
/// the vehicle after the sub-step; the barrier values and the slack are the
/// ones the shield evaluated on the snapshot the control was computed from.
struct StepTrace {
  std::uint64_t seed = 0;
  int episode = 0;
  int step = 0;
  int substep = 0;
  int vehicle = 0;
  VehicleState state;
  LaneIndex lane = kHighwayLane;
  LaneIndex target_lane = kHighwayLane;
  ControlInput raw;
  ControlInput safe;
  bool lon_corrected = false;  // |a_safe - clamp(a_ll)| > 1e-9
  bool lat_vetoed = false;
  double h_ol = std::numeric_limits<double>::infinity();
  double h_otl = std::numeric_limits<double>::infinity();
  double h_otr = std::numeric_limits<double>::infinity();
  double slack = 0.0;
  double headway = std::numeric_limits<double>::infinity();  // s; +inf without a leader
  // min over the longitudinal rows of h_next - (1 - eta) * h; +inf without rows
  double cbf_margin = std::numeric_limits<double>::infinity();
  bool crashed = false;

  bool intervened() const { return lon_corrected || lat_vetoed; }
};

inline constexpr double kInterventionTol = 1e-9;

/// Time headway to the nearest leader in any lane the vehicle occupies.
/// +inf without a leader or at standstill behind a positive gap.
double time_headway(std::size_t ego, std::span<const VehicleView> vehicles,
                    const RoadLayout& layout);

/// Oriented-rectangle overlap test between every pair, returned as
/// (lower index, higher index) into `vehicles`, lexicographically ordered.
std::vector<std::pair<std::size_t, std::size_t>> detect_crash(std::span<const VehicleView> vehicles);

/// Inputs to one vehicle's individual reward.
struct RewardContext {
  bool crashed = false;
  double speed = 0.0;
  double headway = std::numeric_limits<double>::infinity();
  bool on_ramp = false;
  double ramp_time = 0.0;  // s spent on the ramp so far
};

/// Individual reward w_c r_c + w_s r_s + w_h r_h + w_m r_m with
///   r_c = -1 on crash,
///   r_s = (speed - speed_low) / (speed_high - speed_low) clamped to [0, 1],
///   r_h = clamp(log(headway / headway_reference), -1, 0),
///   r_m = -min(1, ramp_time / merge_time_reference) while on the ramp.
double compute_reward(const RewardContext& context, const RewardConfig& weights);

/// Arithmetic mean of the ego reward and its neighbours' rewards.
double shared_reward(double own, std::span<const double> neighbours);

struct StepInfo {
  int step = 0;
  int crash_count = 0;     // colliding pairs detected so far in the episode
  int new_crashes = 0;     // colliding pairs first detected during this step
  int failed_merges = 0;   // cumulative
  int exited = 0;          // cumulative
  int interventions = 0;   // sub-step records of this step with a correction or veto
  int lateral_vetoes = 0;
  int slack_events = 0;    // sub-step records of this step with positive slack
  bool episode_done = false;
};

struct StepResult {
  std::vector<Observation> observations;
  std::vector<double> rewards;  // shared rewards
  std::vector<bool> dones;
  StepInfo info;
};

/// Multi-agent on-ramp merging episode.
///
/// Agents are indexed 0..n-1 in spawn order and keep their index for the whole
/// episode; inactive agents are done, get zero reward, and their actions are
/// ignored. Each behavioural step runs `motion_steps_per_decision` sub-steps.
/// In every sub-step all active vehicles compute their controls from one
/// immutable snapshot before any of them moves.
class MergeEnv {
 public:
  explicit MergeEnv(ScenarioConfig config);

  /// Spawns a fresh fleet for `seed`. The episode index is only a trace label.
  std::vector<Observation> reset(std::uint64_t seed, int episode = 0);

  /// Throws std::invalid_argument unless there is one action per agent, and
  /// std::logic_error when called before reset or after the episode ended.
  StepResult step(std::span<const BehaviouralAction> actions);

  std::size_t agent_count() const { return vehicles_.size(); }
  bool done() const { return done_; }
  int step_count() const { return step_; }
  const ScenarioConfig& config() const { return cfg_; }
  const RoadLayout& layout() const { return layout_; }

  VehicleStatus status(std::size_t agent) const { return vehicles_.at(agent).status; }
  const VehicleState& state(std::size_t agent) const { return vehicles_.at(agent).state; }
  LaneIndex lane(std::size_t agent) const { return vehicles_.at(agent).lane; }
  DrivingTarget target(std::size_t agent) const { return vehicles_.at(agent).target; }
  int vehicle_id(std::size_t agent) const { return vehicles_.at(agent).id; }

  /// Views of the vehicles still on the road (active or crashed), with the
  /// agent index of each view.
  std::vector<VehicleView> views(std::vector<std::size_t>* agents = nullptr) const;

  Observation observation(std::size_t agent) const;
  std::vector<Observation> observations() const;

  /// Everything a scripted policy may use for `agent`.
  PolicyInput policy_input(std::size_t agent, const Observation& observation) const;

  /// Records produced since the last reset, in (step, sub-step, agent) order.
  const std::vector<StepTrace>& traces() const { return traces_; }
  void clear_traces() { traces_.clear(); }

  /// Test hooks: replace the fleet with explicit vehicles and optionally
  /// process agents in a custom order within each sub-step.
  void reset_with(std::vector<VehicleState> states, std::vector<LaneIndex> lanes,
                  std::uint64_t seed = 0, int episode = 0);
  void set_update_order(std::vector<std::size_t> order);

 private:
  struct Vehicle {
    int id = 0;
    VehicleState state;
    LaneIndex lane = kHighwayLane;
    DrivingTarget target;
    VehicleStatus status = VehicleStatus::kActive;
    double ramp_time = 0.0;
  };

  void spawn(std::mt19937_64& rng);
  void substep(int substep, StepInfo& info, std::vector<bool>& crashed_now);
  bool any_active_on_ramp() const;

  ScenarioConfig cfg_;
  RoadLayout layout_;
  std::vector<Vehicle> vehicles_;
  std::vector<std::size_t> order_;
  std::vector<std::pair<int, int>> crashed_pairs_;
  std::vector<StepTrace> traces_;
  std::uint64_t seed_ = 0;
  int episode_ = 0;
  int step_ = 0;
  int steps_after_merge_ = 0;
  int failed_merges_ = 0;
  int exited_ = 0;
  bool started_ = false;
  bool done_ = false;
};

}  // namespace hss
