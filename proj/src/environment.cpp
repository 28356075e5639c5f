#include "hss/environment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "hss/errors.hpp"

namespace hss {

const char* to_string(VehicleStatus status) {
  switch (status) {
    case VehicleStatus::kActive: return "active";
    case VehicleStatus::kCrashed: return "crashed";
    case VehicleStatus::kExited: return "exited";
    case VehicleStatus::kFailedMerge: return "failed_merge";
  }
  return "unknown";
}

double time_headway(std::size_t ego, std::span<const VehicleView> vehicles,
                    const RoadLayout& layout) {
  const auto leaders = relevant_leaders(ego, vehicles, layout, {});
  const double speed = vehicles[ego].state.speed;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& l : leaders) {
    double h;
    if (speed > 0.0) {
      h = l.gap / speed;
    } else {
      h = l.gap >= 0.0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    }
    best = std::min(best, h);
  }
  return best;
}

namespace {

struct Box {
  double cx, cy;
  std::array<double, 2> ax, ay;  // unit axes along the length and the width
  double hl, hw;
};

Box make_box(const VehicleView& v) {
  const double c = std::cos(v.state.psi);
  const double s = std::sin(v.state.psi);
  return {v.state.x, v.state.y, {c, s}, {-s, c}, 0.5 * v.geometry.length, 0.5 * v.geometry.width};
}

double radius(const Box& b, double nx, double ny) {
  return b.hl * std::abs(b.ax[0] * nx + b.ax[1] * ny) + b.hw * std::abs(b.ay[0] * nx + b.ay[1] * ny);
}

bool overlap(const Box& a, const Box& b) {
  const double dx = b.cx - a.cx;
  const double dy = b.cy - a.cy;
  for (const auto& axis : {a.ax, a.ay, b.ax, b.ay}) {
    const double d = std::abs(dx * axis[0] + dy * axis[1]);
    if (d >= radius(a, axis[0], axis[1]) + radius(b, axis[0], axis[1])) return false;
  }
  return true;
}

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> detect_crash(std::span<const VehicleView> vehicles) {
  std::vector<Box> boxes;
  boxes.reserve(vehicles.size());
  for (const auto& v : vehicles) boxes.push_back(make_box(v));
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (overlap(boxes[i], boxes[j])) pairs.emplace_back(i, j);
    }
  }
  return pairs;
}

double compute_reward(const RewardContext& ctx, const RewardConfig& w) {
  const double r_c = ctx.crashed ? -1.0 : 0.0;
  const double r_s =
      std::clamp((ctx.speed - w.speed_low) / (w.speed_high - w.speed_low), 0.0, 1.0);
  double r_h = 0.0;
  if (ctx.headway <= 0.0) {
    r_h = -1.0;
  } else if (std::isfinite(ctx.headway)) {
    r_h = std::clamp(std::log(ctx.headway / w.headway_reference), -1.0, 0.0);
  }
  const double r_m = ctx.on_ramp ? -std::min(1.0, ctx.ramp_time / w.merge_time_reference) : 0.0;
  return w.w_c * r_c + w.w_s * r_s + w.w_h * r_h + w.w_m * r_m;
}

double shared_reward(double own, std::span<const double> neighbours) {
  double sum = own;
  for (double r : neighbours) sum += r;
  return sum / static_cast<double>(neighbours.size() + 1);
}

MergeEnv::MergeEnv(ScenarioConfig config) : cfg_(std::move(config)) {
  validate(cfg_);
  layout_ = build_merging_layout(cfg_.road);
}

namespace {

// Largest count whose centres fit in [a, b) at the given spacing.
int capacity(double a, double b, double spacing) {
  if (!(b > a)) return 0;
  int k = 1;
  while (static_cast<double>(k) * spacing < b - a) ++k;
  return k;
}

std::vector<double> place(int k, double a, double b, double spacing, std::mt19937_64& rng) {
  const double free = (b - a) - (k - 1) * spacing;
  std::uniform_real_distribution<double> u(0.0, free);
  std::vector<double> xs(static_cast<std::size_t>(k));
  for (double& x : xs) x = u(rng);
  std::sort(xs.begin(), xs.end());
  for (int i = 0; i < k; ++i) xs[static_cast<std::size_t>(i)] += a + i * spacing;
  return xs;
}

}  // namespace

void MergeEnv::spawn(std::mt19937_64& rng) {
  const EpisodeConfig& e = cfg_.episode;
  const DensityBand band = density_band(e.density);
  // Centre spacing that keeps bumper-to-bumper gaps at least spawn_spacing.
  const double s = e.spawn_spacing + cfg_.geometry.length;
  const int cap_h = capacity(0.0, e.spawn_region, s);
  const int cap_r = capacity(layout_.ramp_start(), std::min(e.spawn_region, layout_.merge_start()), s);

  int n = std::uniform_int_distribution<int>(band.min_vehicles, band.max_vehicles)(rng);
  int r_lo = 0, r_hi = -1;
  for (; n >= 2; --n) {
    r_lo = std::max(1, n - cap_h);
    r_hi = std::min(cap_r, n - 1);
    if (r_lo <= r_hi) break;
  }
  if (n < 2 || n < band.min_vehicles) {
    throw ConfigError("spawn region cannot fit " + std::to_string(band.min_vehicles) +
                      " vehicles at the configured spacing");
  }
  // The ramp is filled first so every episode exercises as many merges as fit.
  const int ramp = r_hi;
  const int highway = n - ramp;

  const auto hx = place(highway, 0.0, e.spawn_region, s, rng);
  const auto rx = place(ramp, layout_.ramp_start(),
                        std::min(e.spawn_region, layout_.merge_start()), s, rng);
  std::uniform_real_distribution<double> hv(e.highway_speed_min, e.highway_speed_max);
  std::uniform_real_distribution<double> rv(e.ramp_speed_min, e.ramp_speed_max);

  vehicles_.clear();
  const auto add = [&](double x, LaneIndex lane, double speed) {
    Vehicle v;
    v.id = static_cast<int>(vehicles_.size());
    v.state = make_state(x, layout_.lane_center(lane), speed);
    v.lane = lane;
    v.target = DrivingTarget{lane, speed};
    vehicles_.push_back(v);
  };
  for (double x : hx) add(x, kHighwayLane, hv(rng));
  for (double x : rx) add(x, kRampLane, rv(rng));
}

std::vector<Observation> MergeEnv::reset(std::uint64_t seed, int episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode)};
  std::mt19937_64 rng(seq);
  spawn(rng);
  seed_ = seed;
  episode_ = episode;
  step_ = 0;
  steps_after_merge_ = 0;
  failed_merges_ = 0;
  exited_ = 0;
  crashed_pairs_.clear();
  traces_.clear();
  order_.resize(vehicles_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  started_ = true;
  done_ = false;
  return observations();
}

void MergeEnv::reset_with(std::vector<VehicleState> states, std::vector<LaneIndex> lanes,
                          std::uint64_t seed, int episode) {
  if (states.size() != lanes.size()) throw std::invalid_argument("reset_with: size mismatch");
  vehicles_.clear();
  for (std::size_t i = 0; i < states.size(); ++i) {
    Vehicle v;
    v.id = static_cast<int>(i);
    v.state = states[i];
    v.lane = lanes[i];
    v.target = DrivingTarget{lanes[i], states[i].speed};
    vehicles_.push_back(v);
  }
  seed_ = seed;
  episode_ = episode;
  step_ = 0;
  steps_after_merge_ = 0;
  failed_merges_ = 0;
  exited_ = 0;
  crashed_pairs_.clear();
  traces_.clear();
  order_.resize(vehicles_.size());
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  started_ = true;
  done_ = vehicles_.empty();
}

void MergeEnv::set_update_order(std::vector<std::size_t> order) {
  std::vector<std::size_t> sorted = order;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (sorted[i] != i) throw std::invalid_argument("set_update_order: not a permutation");
  }
  if (sorted.size() != vehicles_.size()) throw std::invalid_argument("set_update_order: size mismatch");
  order_ = std::move(order);
}

std::vector<VehicleView> MergeEnv::views(std::vector<std::size_t>* agents) const {
  std::vector<VehicleView> out;
  if (agents) agents->clear();
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    const Vehicle& v = vehicles_[i];
    if (v.status != VehicleStatus::kActive && v.status != VehicleStatus::kCrashed) continue;
    out.push_back(VehicleView{v.id, v.state, cfg_.geometry, v.lane});
    if (agents) agents->push_back(i);
  }
  return out;
}

Observation MergeEnv::observation(std::size_t agent) const {
  const std::size_t n = cfg_.episode.observed_vehicles;
  if (vehicles_.at(agent).status != VehicleStatus::kActive) {
    return Observation{std::vector<double>((n + 1) * kVehicleFeatures, 0.0)};
  }
  std::vector<std::size_t> agents;
  const auto vs = views(&agents);
  const auto pos = static_cast<std::size_t>(std::find(agents.begin(), agents.end(), agent) - agents.begin());
  return build_observation(pos, vs, layout_.perception_range(), n);
}

std::vector<Observation> MergeEnv::observations() const {
  std::vector<Observation> out;
  out.reserve(vehicles_.size());
  for (std::size_t i = 0; i < vehicles_.size(); ++i) out.push_back(observation(i));
  return out;
}

PolicyInput MergeEnv::policy_input(std::size_t agent, const Observation& obs) const {
  const Vehicle& v = vehicles_.at(agent);
  PolicyInput in;
  in.observation = &obs;
  in.state = v.state;
  in.lane = v.lane;
  in.layout = &layout_;
  in.shield = &cfg_.shield;
  if (v.status != VehicleStatus::kActive) return in;
  const auto left = layout_.shifted_lane(v.lane, -1, v.state.x);
  if (!left) return in;
  std::vector<std::size_t> agents;
  const auto vs = views(&agents);
  const auto pos = static_cast<std::size_t>(std::find(agents.begin(), agents.end(), agent) - agents.begin());
  in.left_exists = true;
  in.left = identify_neighbors(pos, vs, layout_, *left);
  if (in.left.target_rear) in.left_rear_speed = vs[in.left.target_rear->index].state.speed;
  return in;
}

bool MergeEnv::any_active_on_ramp() const {
  return std::any_of(vehicles_.begin(), vehicles_.end(), [](const Vehicle& v) {
    return v.status == VehicleStatus::kActive && v.lane == kRampLane;
  });
}

namespace {

struct Decision {
  ControlInput raw;
  ControlInput safe;
  bool lon_corrected = false;
  bool lat_vetoed = false;
  double h_ol = std::numeric_limits<double>::infinity();
  double h_otl = std::numeric_limits<double>::infinity();
  double h_otr = std::numeric_limits<double>::infinity();
  double slack = 0.0;
  std::vector<BarrierEvaluation> barriers;
};

}  // namespace

void MergeEnv::substep(int substep, StepInfo& info, std::vector<bool>& crashed_now) {
  const ShieldConfig& sc = cfg_.shield;
  const double dt = sc.dt;
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> agents;
  const std::vector<VehicleView> snapshot = views(&agents);
  std::vector<std::size_t> pos_of(vehicles_.size(), 0);
  for (std::size_t k = 0; k < agents.size(); ++k) pos_of[agents[k]] = k;

  std::vector<Decision> decisions(vehicles_.size());
  std::vector<bool> moving(vehicles_.size(), false);
  for (std::size_t agent : order_) {
    Vehicle& v = vehicles_[agent];
    if (v.status != VehicleStatus::kActive) continue;
    moving[agent] = true;
    // A lane change toward a lane that has ended falls back to lane keeping.
    if (!layout_.lane_exists(v.target.lane, v.state.x)) v.target.lane = v.lane;
    const std::size_t pos = pos_of[agent];
    Decision& d = decisions[agent];
    d.raw.accel = speed_tracking_accel(v.state, v.target.speed, cfg_.controller.k_v, cfg_.limits);
    d.raw.steering = lane_keep_steering(v.state, layout_.lane_center(v.target.lane),
                                        cfg_.controller, cfg_.geometry, cfg_.limits, dt);
    NeighborTopology topo;
    if (cfg_.episode.shield_enabled) {
      ShieldRequest req;
      req.ego = pos;
      req.vehicles = snapshot;
      req.layout = &layout_;
      req.raw = d.raw;
      req.target_lane = v.target.lane;
      req.shield = &sc;
      req.controller = &cfg_.controller;
      req.limits = cfg_.limits;
      ShieldOutcome out = shield(req);
      d.safe = out.safe;
      d.lat_vetoed = out.lateral_veto;
      d.slack = out.longitudinal.slack;
      d.barriers = std::move(out.longitudinal.barriers);
      topo = out.topology;
    } else {
      d.safe.accel = std::clamp(d.raw.accel, cfg_.limits.a_min, cfg_.limits.a_max);
      d.safe.steering = std::clamp(d.raw.steering, -cfg_.limits.steering_max, cfg_.limits.steering_max);
      topo = identify_neighbors(pos, snapshot, layout_, v.target.lane);
    }
    const double a_req = std::clamp(d.raw.accel, cfg_.limits.a_min, cfg_.limits.a_max);
    d.lon_corrected = std::abs(d.safe.accel - a_req) > kInterventionTol;
    const double own_safe = safe_distance(v.state.speed, sc).x_safe;
    d.h_ol = topo.gap_leading() - own_safe;
    d.h_otl = topo.gap_target_leading() - own_safe;
    if (topo.target_rear) {
      d.h_otr = topo.target_rear->gap -
                safe_distance(snapshot[topo.target_rear->index].state.speed, sc).x_safe;
    }
  }

  // Move every active vehicle from the snapshot.
  for (std::size_t agent = 0; agent < vehicles_.size(); ++agent) {
    if (!moving[agent]) continue;
    Vehicle& v = vehicles_[agent];
    v.state = step_kinematics(v.state, decisions[agent].safe, cfg_.geometry, dt, cfg_.limits.v_abs_max);
    if (decisions[agent].lat_vetoed) v.target.lane = v.lane;
    v.lane = update_lane_membership(v.lane, v.state, layout_);
    if (v.lane == kRampLane) v.ramp_time += dt;
  }

  std::vector<std::size_t> after_agents;
  const std::vector<VehicleView> after = views(&after_agents);
  std::vector<std::size_t> after_pos(vehicles_.size(), 0);
  for (std::size_t k = 0; k < after_agents.size(); ++k) after_pos[after_agents[k]] = k;

  std::vector<StepTrace> records;
  for (std::size_t agent = 0; agent < vehicles_.size(); ++agent) {
    if (!moving[agent]) continue;
    const Vehicle& v = vehicles_[agent];
    const Decision& d = decisions[agent];
    StepTrace t;
    t.seed = seed_;
    t.episode = episode_;
    t.step = step_;
    t.substep = substep;
    t.vehicle = v.id;
    t.state = v.state;
    t.lane = v.lane;
    t.target_lane = v.target.lane;
    t.raw = d.raw;
    t.safe = d.safe;
    t.lon_corrected = d.lon_corrected;
    t.lat_vetoed = d.lat_vetoed;
    t.h_ol = d.h_ol;
    t.h_otl = d.h_otl;
    t.h_otr = d.h_otr;
    t.slack = d.slack;
    t.headway = time_headway(after_pos[agent], after, layout_);
    double margin = inf;
    const VehicleView ego{v.id, v.state, cfg_.geometry, v.lane};
    const double x_safe = safe_distance(v.state.speed, sc).x_safe;
    for (const auto& b : d.barriers) {
      const Vehicle& lead = vehicles_[static_cast<std::size_t>(b.leader_id)];
      const VehicleView lv{lead.id, lead.state, cfg_.geometry, lead.lane};
      const double h_next = longitudinal_gap(ego, lv) - x_safe;
      margin = std::min(margin, h_next - (1.0 - sc.eta) * b.h);
    }
    t.cbf_margin = margin;
    if (t.intervened()) ++info.interventions;
    if (t.lat_vetoed) ++info.lateral_vetoes;
    if (t.slack > kSlackActiveTol) ++info.slack_events;
    records.push_back(t);
  }

  // Collisions among everything still on the road; colliding vehicles freeze.
  for (const auto& [i, j] : detect_crash(after)) {
    const int a = after[i].id;
    const int b = after[j].id;
    const std::pair<int, int> key{std::min(a, b), std::max(a, b)};
    if (std::find(crashed_pairs_.begin(), crashed_pairs_.end(), key) != crashed_pairs_.end()) continue;
    crashed_pairs_.push_back(key);
    ++info.new_crashes;
    for (std::size_t agent : {after_agents[i], after_agents[j]}) {
      Vehicle& v = vehicles_[agent];
      if (v.status != VehicleStatus::kActive) continue;
      v.status = VehicleStatus::kCrashed;
      v.state.speed = v.state.vx = v.state.vy = 0.0;
      crashed_now[agent] = true;
    }
  }
  for (auto& t : records) {
    const std::size_t agent = static_cast<std::size_t>(t.vehicle);
    t.crashed = vehicles_[agent].status == VehicleStatus::kCrashed;
  }

  for (Vehicle& v : vehicles_) {
    if (v.status != VehicleStatus::kActive) continue;
    if (v.state.x - 0.5 * cfg_.geometry.length > layout_.total_length()) {
      v.status = VehicleStatus::kExited;
      ++exited_;
    } else if (v.lane == kRampLane && v.state.x > layout_.merge_end()) {
      v.status = VehicleStatus::kFailedMerge;
      ++failed_merges_;
    }
  }
  traces_.insert(traces_.end(), records.begin(), records.end());
}

StepResult MergeEnv::step(std::span<const BehaviouralAction> actions) {
  if (!started_) throw std::logic_error("step called before reset");
  if (done_) throw std::logic_error("step called after the episode ended");
  if (actions.size() != vehicles_.size()) {
    throw std::invalid_argument("expected " + std::to_string(vehicles_.size()) + " actions, got " +
                                std::to_string(actions.size()));
  }

  std::vector<bool> participating(vehicles_.size(), false);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    Vehicle& v = vehicles_[i];
    if (v.status != VehicleStatus::kActive) continue;
    participating[i] = true;
    v.target = decode_action(actions[i], v.target, v.state.x, layout_, cfg_.controller.speed_step,
                             cfg_.limits.v_abs_max);
  }

  StepInfo info;
  info.step = step_;
  std::vector<bool> crashed_now(vehicles_.size(), false);
  for (int k = 0; k < cfg_.episode.motion_steps_per_decision; ++k) {
    substep(k, info, crashed_now);
    const bool none_active = std::none_of(vehicles_.begin(), vehicles_.end(), [](const Vehicle& v) {
      return v.status == VehicleStatus::kActive;
    });
    if (none_active || (info.new_crashes > 0 && cfg_.episode.end_on_crash)) break;
  }
  ++step_;

  // Individual rewards for everyone that took part in this step.
  std::vector<std::size_t> agents;
  const auto vs = views(&agents);
  std::vector<double> individual(vehicles_.size(), 0.0);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (!participating[i]) continue;
    const Vehicle& v = vehicles_[i];
    RewardContext ctx;
    ctx.crashed = crashed_now[i];
    ctx.speed = v.state.speed;
    ctx.on_ramp = v.status == VehicleStatus::kActive && v.lane == kRampLane;
    ctx.ramp_time = v.ramp_time;
    const auto it = std::find(agents.begin(), agents.end(), i);
    if (it != agents.end()) {
      ctx.headway = time_headway(static_cast<std::size_t>(it - agents.begin()), vs, layout_);
    }
    individual[i] = compute_reward(ctx, cfg_.reward);
  }

  StepResult result;
  result.rewards.assign(vehicles_.size(), 0.0);
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    if (!participating[i]) continue;
    std::vector<std::size_t> hood;
    for (std::size_t j = 0; j < vehicles_.size(); ++j) {
      if (j == i || !participating[j]) continue;
      if (std::abs(vehicles_[j].state.x - vehicles_[i].state.x) <= layout_.perception_range()) {
        hood.push_back(j);
      }
    }
    std::sort(hood.begin(), hood.end(), [&](std::size_t a, std::size_t b) {
      const double da = std::abs(vehicles_[a].state.x - vehicles_[i].state.x);
      const double db = std::abs(vehicles_[b].state.x - vehicles_[i].state.x);
      if (da != db) return da < db;
      return vehicles_[a].id < vehicles_[b].id;
    });
    if (hood.size() > cfg_.episode.observed_vehicles) hood.resize(cfg_.episode.observed_vehicles);
    std::vector<double> rs;
    for (std::size_t j : hood) rs.push_back(individual[j]);
    result.rewards[i] = shared_reward(individual[i], rs);
  }

  if (!any_active_on_ramp()) ++steps_after_merge_;
  const bool none_active = std::none_of(vehicles_.begin(), vehicles_.end(), [](const Vehicle& v) {
    return v.status == VehicleStatus::kActive;
  });
  done_ = none_active || steps_after_merge_ >= cfg_.episode.max_steps_after_merge ||
          step_ >= cfg_.episode.max_steps ||
          (cfg_.episode.end_on_crash && !crashed_pairs_.empty());

  info.crash_count = static_cast<int>(crashed_pairs_.size());
  info.failed_merges = failed_merges_;
  info.exited = exited_;
  info.episode_done = done_;
  result.info = info;
  result.observations = observations();
  result.dones.resize(vehicles_.size());
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    result.dones[i] = done_ || vehicles_[i].status != VehicleStatus::kActive;
  }
  return result;
}

}  // namespace hss
