#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include "hss/environment.hpp"

using namespace hss;

namespace {

ScenarioConfig scenario(Density density = Density::kModerate) {
  ScenarioConfig c;
  c.episode.density = density;
  return c;
}

VehicleView view(int id, double x, double y, double psi = 0.0) {
  return VehicleView{id, make_state(x, y, 20.0, psi), {}, kHighwayLane};
}

std::vector<BehaviouralAction> random_actions(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> pick(0, kActionCount - 1);
  std::vector<BehaviouralAction> a(n);
  for (auto& x : a) x = action_from_index(pick(rng));
  return a;
}

bool same_state(const VehicleState& a, const VehicleState& b) {
  return a.x == b.x && a.y == b.y && a.vx == b.vx && a.vy == b.vy && a.psi == b.psi &&
         a.speed == b.speed;
}

}  // namespace

TEST_CASE("reset respects the density band and spawn spacing") {
  for (Density d : {Density::kLight, Density::kModerate}) {
    MergeEnv env(scenario(d));
    const DensityBand band = density_band(d);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      env.reset(seed);
      const auto n = static_cast<int>(env.agent_count());
      CHECK(n >= band.min_vehicles);
      CHECK(n <= band.max_vehicles);
      int ramp = 0;
      for (std::size_t i = 0; i < env.agent_count(); ++i) {
        if (env.lane(i) == kRampLane) ++ramp;
        CHECK(env.status(i) == VehicleStatus::kActive);
        for (std::size_t j = 0; j < env.agent_count(); ++j) {
          if (i == j || env.lane(i) != env.lane(j) || env.state(j).x <= env.state(i).x) continue;
          CHECK(env.state(j).x - env.state(i).x - env.config().geometry.length >= 50.0 - 1e-9);
        }
      }
      CHECK(ramp >= 1);
      CHECK(ramp < n);
    }
  }
}

TEST_CASE("reset is deterministic for a fixed seed") {
  MergeEnv a(scenario());
  MergeEnv b(scenario());
  a.reset(7, 3);
  b.reset(7, 3);
  REQUIRE(a.agent_count() == b.agent_count());
  for (std::size_t i = 0; i < a.agent_count(); ++i) {
    CHECK(same_state(a.state(i), b.state(i)));
    CHECK(a.lane(i) == b.lane(i));
  }
}

TEST_CASE("following the lane at the target speed is pure kinematics") {
  ScenarioConfig c = scenario();
  MergeEnv env(c);
  const VehicleState s0 = make_state(100.0, 0.0, 25.0);
  env.reset_with({s0}, {kHighwayLane});
  const std::vector<BehaviouralAction> act{BehaviouralAction::kFollowLane};
  env.step(act);

  VehicleState expected = s0;
  for (int k = 0; k < c.episode.motion_steps_per_decision; ++k) {
    expected = step_kinematics(expected, {}, c.geometry, c.shield.dt, c.limits.v_abs_max);
  }
  CHECK(same_state(env.state(0), expected));
  REQUIRE(env.traces().size() == static_cast<std::size_t>(c.episode.motion_steps_per_decision));
  for (const auto& t : env.traces()) {
    CHECK_FALSE(t.intervened());
    CHECK(t.slack == 0.0);
  }
}

TEST_CASE("collision detection") {
  SUBCASE("separated vehicles") {
    const std::vector<VehicleView> v{view(0, 0.0, 0.0), view(1, 10.0, 0.0), view(2, 0.0, -4.0)};
    CHECK(detect_crash(v).empty());
  }
  SUBCASE("half a metre of overlap") {
    const std::vector<VehicleView> v{view(0, 0.0, 0.0), view(1, 4.5, 0.0), view(2, 50.0, 0.0)};
    const auto pairs = detect_crash(v);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].first == 0);
    CHECK(pairs[0].second == 1);
  }
  SUBCASE("side by side in adjacent lanes") {
    const std::vector<VehicleView> v{view(0, 0.0, 0.0), view(1, 0.0, -4.0, 0.05)};
    CHECK(detect_crash(v).empty());
  }
  SUBCASE("rotated corner contact") {
    const std::vector<VehicleView> v{view(0, 0.0, 0.0), view(1, 4.0, 1.5, 0.7)};
    CHECK(detect_crash(v).size() == 1);
  }
}

TEST_CASE("individual reward terms") {
  const RewardConfig w;
  RewardContext ctx;
  ctx.speed = w.speed_high;
  CHECK(compute_reward(ctx, w) == doctest::Approx(w.w_s));

  ctx.crashed = true;
  CHECK(compute_reward(ctx, w) == doctest::Approx(w.w_s - w.w_c));

  ctx = {};
  ctx.speed = w.speed_low;
  ctx.headway = w.headway_reference;
  CHECK(compute_reward(ctx, w) == 0.0);

  ctx.headway = 0.0;
  CHECK(compute_reward(ctx, w) == doctest::Approx(-w.w_h));

  ctx.headway = std::numeric_limits<double>::infinity();
  ctx.on_ramp = true;
  ctx.ramp_time = 2.0 * w.merge_time_reference;
  CHECK(compute_reward(ctx, w) == doctest::Approx(-w.w_m));
}

TEST_CASE("shared reward is the neighbourhood mean") {
  const std::vector<double> one{0.8};
  CHECK(shared_reward(0.4, one) == doctest::Approx(0.6));
  CHECK(shared_reward(0.4, {}) == 0.4);

  std::vector<double> rs{1.0, -2.0, 0.5, 3.0};
  const double ref = shared_reward(0.25, rs);
  std::reverse(rs.begin(), rs.end());
  CHECK(shared_reward(0.25, rs) == doctest::Approx(ref).epsilon(1e-15));
}

TEST_CASE("time headway") {
  const RoadLayout layout = build_merging_layout({});
  std::vector<VehicleView> v{view(0, 100.0, 0.0), view(1, 125.0, 0.0)};
  CHECK(time_headway(0, v, layout) == doctest::Approx(1.0));
  CHECK(std::isinf(time_headway(1, v, layout)));
  v[0].state = make_state(100.0, 0.0, 0.0);
  CHECK(time_headway(0, v, layout) == std::numeric_limits<double>::infinity());
}

TEST_CASE("agent update order does not change the outcome") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    MergeEnv a(scenario());
    MergeEnv b(scenario());
    a.reset(seed);
    b.reset(seed);
    std::vector<std::size_t> order(b.agent_count());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = order.size() - 1 - i;
    b.set_update_order(order);

    std::mt19937_64 rng(seed);
    while (!a.done()) {
      const auto actions = random_actions(a.agent_count(), rng);
      const StepResult ra = a.step(actions);
      const StepResult rb = b.step(actions);
      CHECK(ra.rewards == rb.rewards);
      CHECK(ra.dones == rb.dones);
      for (std::size_t i = 0; i < a.agent_count(); ++i) CHECK(same_state(a.state(i), b.state(i)));
    }
    CHECK(b.done());
  }
}

TEST_CASE("update order must be a permutation") {
  MergeEnv env(scenario());
  env.reset(0);
  std::vector<std::size_t> bad(env.agent_count(), 0);
  CHECK_THROWS_AS(env.set_update_order(bad), std::invalid_argument);
  CHECK_THROWS_AS(env.set_update_order({}), std::invalid_argument);
}

TEST_CASE("step argument and lifecycle errors") {
  MergeEnv env(scenario());
  const std::vector<BehaviouralAction> none;
  CHECK_THROWS_AS(env.step(none), std::logic_error);

  env.reset(1);
  std::vector<BehaviouralAction> wrong(env.agent_count() + 1, BehaviouralAction::kFollowLane);
  CHECK_THROWS_AS(env.step(wrong), std::invalid_argument);

  const std::vector<BehaviouralAction> idle(env.agent_count(), BehaviouralAction::kFollowLane);
  int steps = 0;
  while (!env.done()) {
    env.step(idle);
    ++steps;
  }
  CHECK(steps <= env.config().episode.max_steps);
  CHECK_THROWS_AS(env.step(idle), std::logic_error);
}

TEST_CASE("observations are relative to the ego") {
  MergeEnv env(scenario());
  env.reset(4);
  const std::size_t n = env.config().episode.observed_vehicles;
  for (std::size_t i = 0; i < env.agent_count(); ++i) {
    const Observation obs = env.observation(i);
    REQUIRE(obs.blocks() == n + 1);
    CHECK(obs.block(0)[0] == 1.0);
    CHECK(obs.block(0)[1] == env.state(i).x);
    for (std::size_t k = 1; k <= n; ++k) {
      const auto b = obs.block(k);
      if (b[0] == 0.0) {
        CHECK(std::all_of(b.begin(), b.end(), [](double x) { return x == 0.0; }));
        continue;
      }
      bool matched = false;
      for (std::size_t j = 0; j < env.agent_count(); ++j) {
        if (j == i) continue;
        if (env.state(j).x - env.state(i).x == b[1] && env.state(j).y - env.state(i).y == b[2]) {
          matched = true;
        }
      }
      CHECK(matched);
      CHECK(std::abs(b[1]) <= env.layout().perception_range());
    }
  }
}

TEST_CASE("trace records cover every active vehicle and sub-step") {
  MergeEnv env(scenario());
  env.reset(2);
  std::mt19937_64 rng(2);
  std::size_t expected = 0;
  while (!env.done()) {
    const auto before = env.traces().size();
    std::size_t active = 0;
    for (std::size_t i = 0; i < env.agent_count(); ++i) {
      if (env.status(i) == VehicleStatus::kActive) ++active;
    }
    const StepResult r = env.step(random_actions(env.agent_count(), rng));
    const auto produced = env.traces().size() - before;
    CHECK(produced <= active * static_cast<std::size_t>(env.config().episode.motion_steps_per_decision));
    CHECK(produced >= active);
    expected += produced;
    CHECK(r.observations.size() == env.agent_count());
    CHECK(r.rewards.size() == env.agent_count());
  }
  CHECK(env.traces().size() == expected);
  for (const auto& t : env.traces()) {
    CHECK(t.seed == 2);
    CHECK(t.substep >= 0);
    CHECK(t.substep < env.config().episode.motion_steps_per_decision);
  }
}
