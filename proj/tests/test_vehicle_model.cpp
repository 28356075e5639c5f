#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "hss/vehicle_model.hpp"

using namespace hss;

namespace {

constexpr double kDt = 1.0 / 15.0;
constexpr double kVmax = 40.0;
const VehicleGeometry kCar{};

}  // namespace

TEST_CASE("slip angle reference values") {
  CHECK(slip_angle(0.0) == 0.0);
  CHECK(slip_angle(0.2) == doctest::Approx(std::atan(0.5 * std::tan(0.2))).epsilon(1e-15));
  CHECK(slip_angle(-0.2) == -slip_angle(0.2));
}

TEST_CASE("slip angle rejects steering at or beyond a right angle") {
  CHECK_THROWS_AS(slip_angle(std::numbers::pi / 2.0), std::domain_error);
  CHECK_THROWS_AS(slip_angle(-2.0), std::domain_error);
}

TEST_CASE("slip angle is odd, increasing and no larger than the steering") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  for (int i = 0; i < 1000; ++i) {
    const double a = d(rng);
    const double b = d(rng);
    CHECK(slip_angle(-a) == -slip_angle(a));
    CHECK(std::abs(slip_angle(a)) <= std::abs(a));
    if (a < b) CHECK(slip_angle(a) < slip_angle(b));
  }
}

TEST_CASE("straight constant-velocity motion") {
  const VehicleState s = make_state(0.0, 0.0, 20.0);
  const VehicleState n = step_kinematics(s, {}, kCar, 0.1, kVmax);
  CHECK(n.x == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(n.y == 0.0);
  CHECK(n.vx == 20.0);
  CHECK(n.vy == 0.0);
  CHECK(n.psi == 0.0);
  CHECK(n.speed == 20.0);
}

TEST_CASE("heading update follows the bicycle yaw rate at the start speed") {
  const VehicleState s = make_state(0.0, 0.0, 10.0);
  const double beta = slip_angle(0.1);
  const VehicleState n = step_kinematics(s, {0.0, 0.1}, kCar, kDt, kVmax);
  CHECK(n.psi == doctest::Approx((2.0 * 10.0 / 5.0) * std::sin(beta) * kDt).epsilon(1e-14));
}

TEST_CASE("full acceleration matches the discrete Euler sum") {
  const double v0 = 10.0;
  const double a = 5.0;
  VehicleState s = make_state(0.0, 0.0, v0);
  const int k = 30;
  for (int i = 0; i < k; ++i) s = step_kinematics(s, {a, 0.0}, kCar, kDt, kVmax);
  // x_k = dt * sum_{j<k} (v0 + a j dt)
  const double expected = k * v0 * kDt + a * kDt * kDt * k * (k - 1) / 2.0;
  CHECK(s.x == doctest::Approx(expected).epsilon(1e-12));
  CHECK(s.speed == doctest::Approx(v0 + a * k * kDt).epsilon(1e-12));
}

TEST_CASE("zero control conserves speed and heading") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> speed(0.0, 40.0);
  std::uniform_real_distribution<double> heading(-0.3, 0.3);
  for (int trial = 0; trial < 100; ++trial) {
    const VehicleState s0 = make_state(0.0, 0.0, speed(rng), heading(rng));
    VehicleState s = s0;
    for (int i = 0; i < 300; ++i) s = step_kinematics(s, {}, kCar, kDt, kVmax);
    CHECK(std::abs(s.speed - s0.speed) <= 1e-12);
    CHECK(std::abs(s.psi - s0.psi) <= 1e-12);
  }
}

TEST_CASE("constant steering gives constant heading increments") {
  VehicleState s = make_state(0.0, 0.0, 15.0);
  const ControlInput turn{0.0, 0.05};
  double previous = -1.0;
  for (int i = 0; i < 50; ++i) {
    const VehicleState n = step_kinematics(s, turn, kCar, kDt, kVmax);
    const double inc = n.psi - s.psi;
    if (previous >= 0.0) CHECK(std::abs(inc - previous) <= 1e-12);
    previous = inc;
    s = n;
  }
}

TEST_CASE("splitting a step shows first-order convergence") {
  // Difference between one step and two half steps shrinks fourfold when dt halves.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> speed(5.0, 35.0);
  std::uniform_real_distribution<double> accel(-5.0, 5.0);
  std::uniform_real_distribution<double> steer(-0.3, 0.3);
  const auto split_gap = [](const VehicleState& s, const ControlInput& u, double h) {
    const VehicleState one = step_kinematics(s, u, kCar, h, kVmax);
    const VehicleState two = step_kinematics(step_kinematics(s, u, kCar, h / 2, kVmax), u, kCar, h / 2, kVmax);
    return std::hypot(one.x - two.x, one.y - two.y);
  };
  for (int i = 0; i < 1000; ++i) {
    const VehicleState s = make_state(0.0, 0.0, speed(rng), steer(rng) * 0.5);
    const ControlInput u{accel(rng), steer(rng)};
    const double coarse = split_gap(s, u, kDt);
    const double fine = split_gap(s, u, kDt / 2);
    if (coarse < 1e-9) continue;
    CHECK(fine / coarse == doctest::Approx(0.25).epsilon(0.2));
  }
}

TEST_CASE("speed is clamped to the absolute range and the velocity rescaled") {
  const VehicleState slow = make_state(0.0, 0.0, 0.1, 0.2);
  const VehicleState stopped = step_kinematics(slow, {-5.0, 0.0}, kCar, kDt, kVmax);
  CHECK(stopped.speed == 0.0);
  CHECK(stopped.vx == 0.0);
  CHECK(stopped.vy == 0.0);

  const VehicleState fast = make_state(0.0, 0.0, 39.9, 0.1);
  const VehicleState capped = step_kinematics(fast, {5.0, 0.0}, kCar, kDt, kVmax);
  CHECK(capped.speed == kVmax);
  CHECK(std::hypot(capped.vx, capped.vy) == doctest::Approx(kVmax).epsilon(1e-12));
}

TEST_CASE("state invariants hold along random trajectories") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> accel(-5.0, 5.0);
  std::uniform_real_distribution<double> steer(-0.05, 0.05);
  VehicleState s = make_state(0.0, 0.0, 20.0);
  for (int i = 0; i < 500; ++i) {
    s = step_kinematics(s, {accel(rng), steer(rng)}, kCar, kDt, kVmax);
    CHECK(s.speed >= 0.0);
    CHECK(s.speed <= kVmax);
    const double sq = s.vx * s.vx + s.vy * s.vy;
    CHECK(std::abs(sq - s.speed * s.speed) <= 1e-9 * std::max(1.0, s.speed * s.speed));
  }
}

TEST_CASE("velocity bounds") {
  SUBCASE("interior") {
    const SpeedRange r = velocity_bounds(20.0, -5.0, 5.0, kDt, kVmax);
    CHECK(r.lo == doctest::Approx(19.667).epsilon(1e-4));
    CHECK(r.hi == doctest::Approx(20.333).epsilon(1e-4));
  }
  SUBCASE("zero floor") {
    const SpeedRange r = velocity_bounds(0.0, -5.0, 5.0, kDt, kVmax);
    CHECK(r.lo == 0.0);
    CHECK(r.hi == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  SUBCASE("ceiling") {
    const SpeedRange r = velocity_bounds(kVmax, -5.0, 5.0, kDt, kVmax);
    CHECK(r.hi == kVmax);
  }
  SUBCASE("bracket the current speed") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> v(0.0, kVmax);
    for (int i = 0; i < 1000; ++i) {
      const double s = v(rng);
      const SpeedRange r = velocity_bounds(s, -5.0, 5.0, kDt, kVmax);
      CHECK(r.lo <= s);
      CHECK(s <= r.hi);
    }
  }
}
