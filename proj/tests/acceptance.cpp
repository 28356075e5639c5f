// Acceptance checks: one PASS/FAIL line per criterion, exit code 1 on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hss/harness.hpp"
#include "hss/qp_solver.hpp"
#include "hss/safety_shield.hpp"
#include "hss/vehicle_model.hpp"

#ifndef HSS_CLI_PATH
#error "HSS_CLI_PATH must name the hss_cli executable"
#endif

using namespace hss;
using Clock = std::chrono::steady_clock;

namespace {

// Pinned tolerances and workloads.
constexpr int kEpisodesPerSeed = 334;
const std::vector<std::uint64_t> kSeeds{0, 1, 2};
constexpr double kMinHeadway = 0.5;                // s
constexpr double kSafetyBudget = 300.0;            // s for both shielded batches
constexpr double kUnshieldedCrashRate = 0.8;
constexpr int kQpInstances = 1000;
constexpr double kQpResolution = 1e-4;
constexpr double kQpArgTol = 1e-3;
constexpr double kQpObjTol = 1e-6;
constexpr double kQpBudget = 10.0;                 // s
constexpr double kCbfTol = 1e-6;
constexpr int kMinimalitySamples = 10000;
constexpr double kBufferFloor = 0.001;             // m
constexpr double kKinematicsTol = 1e-12;
constexpr int kSlipSamples = 1000;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) { return format_number(v); }

struct SafetyRun {
  MetricsReport total;
  double seconds = 0.0;
};

SafetyRun shielded_batches() {
  ScenarioConfig c;
  c.episode.density = Density::kModerate;
  c.episode.shield_enabled = true;
  SafetyRun run;
  const auto t0 = Clock::now();
  for (const char* policy : {"random", "aggressive_merger"}) {
    const BatchResult b = run_batch(c, policy, kEpisodesPerSeed, kSeeds);
    std::cout << "  " << policy << ": episodes=" << b.total.episodes
              << " crashes=" << b.total.crash_events << " slack_events=" << b.total.slack_events
              << " min_headway=" << fmt(b.total.min_headway)
              << " min_cbf_margin=" << fmt(b.total.min_cbf_margin) << std::endl;
    run.total.merge(b.total);
  }
  run.seconds = seconds_since(t0);
  return run;
}

void check_safety(const SafetyRun& run) {
  const MetricsReport& m = run.total;
  const bool ok = m.crash_events == 0 && m.min_headway >= kMinHeadway && run.seconds <= kSafetyBudget;
  report(ok, "shielded_safety",
         "episodes=" + std::to_string(m.episodes) + " crashes=" + std::to_string(m.crash_events) +
             " min_headway=" + fmt(m.min_headway) + "s runtime=" + fmt(std::round(run.seconds * 10) / 10) + "s");
}

void check_cbf(const SafetyRun& run) {
  const MetricsReport& m = run.total;
  report(m.min_cbf_margin >= -kCbfTol, "cbf_audit",
         "records=" + std::to_string(m.records) + " min_margin=" + fmt(m.min_cbf_margin));
}

void check_unshielded() {
  ScenarioConfig c;
  c.episode.density = Density::kModerate;
  c.episode.shield_enabled = false;
  const BatchResult b = run_batch(c, "aggressive_merger", kEpisodesPerSeed, kSeeds);
  const double rate = b.total.crash_episode_rate();
  report(rate >= kUnshieldedCrashRate, "unshielded_aggressive_crashes",
         std::to_string(b.total.crash_episodes) + "/" + std::to_string(b.total.episodes) +
             " rate=" + fmt(std::round(rate * 1000) / 1000));
}

void check_qp() {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> coeff(-2.0, 2.0);
  std::uniform_real_distribution<double> rhs(-10.0, 10.0);
  std::uniform_real_distribution<double> edge(-20.0, 20.0);
  std::uniform_int_distribution<int> rows(1, 3);
  double worst_arg = 0.0;
  double worst_obj = -std::numeric_limits<double>::infinity();
  int bad = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < kQpInstances; ++i) {
    ShieldQP p;
    double lo = edge(rng);
    double hi = edge(rng);
    if (lo > hi) std::swap(lo, hi);
    p.lower = {lo};
    p.upper = {hi};
    const int m = rows(rng);
    for (int r = 0; r < m; ++r) p.rows.push_back({{coeff(rng)}, rhs(rng)});
    const QPSolution s = solve_shield_qp(p);
    const QPSolution g = grid_oracle(p, kQpResolution);
    const double d_arg = std::abs(s.u[0] - g.u[0]);
    const double d_obj = objective(p, s.u) - objective(p, g.u);
    worst_arg = std::max(worst_arg, d_arg);
    worst_obj = std::max(worst_obj, d_obj);
    if (d_arg > kQpArgTol || d_obj > kQpObjTol) ++bad;
  }
  const double secs = seconds_since(t0);
  report(bad == 0 && secs < kQpBudget, "qp_oracle",
         std::to_string(kQpInstances) + " instances, mismatches=" + std::to_string(bad) +
             " max|du|=" + fmt(worst_arg) + " max dJ=" + fmt(worst_obj) + " runtime=" +
             fmt(std::round(secs * 100) / 100) + "s");
}

void check_minimality() {
  const ShieldConfig sc;
  const ControllerConfig ctl;
  const VehicleLimits lim;
  const VehicleGeometry car;
  const RoadLayout layout = build_merging_layout({});
  std::mt19937_64 rng(777);
  std::uniform_real_distribution<double> speed(0.0, 40.0);
  std::uniform_real_distribution<double> gap(0.0, layout.perception_range() - car.length);
  std::uniform_real_distribution<double> accel(-8.0, 8.0);
  std::uniform_real_distribution<double> steer(-0.1, 0.1);
  int checked = 0;
  int mismatches = 0;
  long drawn = 0;
  while (checked < kMinimalitySamples) {
    ++drawn;
    const VehicleState ego = make_state(50.0, 0.0, speed(rng));
    const double g = gap(rng);
    const VehicleState lead = make_state(50.0 + car.length + g, 0.0, speed(rng));
    const ControlInput raw{accel(rng), steer(rng)};
    const double a_req = std::clamp(raw.accel, lim.a_min, lim.a_max);
    const double v_ll = ego.speed + a_req * sc.dt;
    // Inactive: the barrier row holds at the request and the recovery cap does not bind.
    const BarrierEvaluation b = build_longitudinal_constraint(ego, v_ll, lead, g, sc);
    if (b.constraint.rhs < 0.0 || !braking_recoverable(ego, v_ll, lead, g, sc)) continue;

    const std::vector<VehicleView> v{{0, ego, car, kHighwayLane}, {1, lead, car, kHighwayLane}};
    ShieldRequest req;
    req.ego = 0;
    req.vehicles = v;
    req.layout = &layout;
    req.raw = raw;
    req.target_lane = kHighwayLane;
    req.shield = &sc;
    req.controller = &ctl;
    req.limits = lim;
    const ShieldOutcome out = shield(req);
    const double s_req = std::clamp(raw.steering, -lim.steering_max, lim.steering_max);
    if (out.safe.accel != a_req || out.safe.steering != s_req) ++mismatches;
    ++checked;
  }
  report(mismatches == 0, "minimal_intervention",
         std::to_string(checked) + " inactive states (" + std::to_string(drawn) +
             " drawn), mismatches=" + std::to_string(mismatches));
}

void check_buffer() {
  const ShieldConfig sc;
  const VehicleGeometry car;
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> speed(0.0, 40.0);
  std::uniform_real_distribution<double> lead_accel(sc.a_min, sc.a_max);
  std::bernoulli_distribution hard_brake(0.2);
  double min_h = std::numeric_limits<double>::infinity();
  int slack = 0;
  for (int trial = 0; trial < 200; ++trial) {
    VehicleState ego = make_state(0.0, 0.0, speed(rng));
    VehicleState lead = make_state(0.0, 0.0, speed(rng));
    // Start from the closest gap the ego can still brake out of.
    double start = safe_distance(ego.speed, sc).x_safe + 10.0 * kBufferFloor;
    while (!braking_recoverable(ego, ego.speed, lead, start, sc)) start += 0.5;
    lead.x = car.length + start;
    for (int k = 0; k < 450; ++k) {
      const double g = lead.x - ego.x - car.length;
      min_h = std::min(min_h, g - safe_distance(ego.speed, sc).x_safe);
      const std::vector<LeaderObservation> leaders{{1, lead, g}};
      const LongitudinalResult r = shield_longitudinal(ego, leaders, sc.a_max, sc);
      if (r.slack > kSlackActiveTol) ++slack;
      const double a_lead = hard_brake(rng) ? sc.a_min : lead_accel(rng);
      ego = step_kinematics(ego, {r.a_safe, 0.0}, car, sc.dt, sc.v_abs_max);
      lead = step_kinematics(lead, {a_lead, 0.0}, car, sc.dt, sc.v_abs_max);
    }
  }
  report(min_h >= kBufferFloor && slack == 0, "proximity_buffer",
         "min h_ol=" + fmt(min_h) + "m slack_events=" + std::to_string(slack));
}

void check_kinematics() {
  const VehicleGeometry car;
  const ShieldConfig sc;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> speed(0.0, 40.0);
  std::uniform_real_distribution<double> heading(-0.3, 0.3);
  std::uniform_real_distribution<double> steer(-1.5, 1.5);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const VehicleState s0 = make_state(0.0, 0.0, speed(rng), heading(rng));
    VehicleState s = s0;
    for (int k = 0; k < 300; ++k) s = step_kinematics(s, {}, car, sc.dt, sc.v_abs_max);
    worst = std::max({worst, std::abs(s.speed - s0.speed), std::abs(s.psi - s0.psi)});
  }
  int odd_failures = 0;
  for (int i = 0; i < kSlipSamples; ++i) {
    const double d = steer(rng);
    if (slip_angle(-d) != -slip_angle(d)) ++odd_failures;
  }
  report(worst <= kKinematicsTol && odd_failures == 0, "kinematics",
         "max drift=" + fmt(worst) + " slip oddness failures=" + std::to_string(odd_failures) + "/" +
             std::to_string(kSlipSamples));
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void check_determinism() {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "hss_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool ran = true;
  for (const char* tag : {"a", "b"}) {
    const fs::path d = dir / tag;
    fs::create_directories(d);
    const std::string cmd = std::string("\"") + HSS_CLI_PATH +
                            "\" --policy random --density moderate --episodes 4 --seeds 0,1 --shield on"
                            " --trace-out \"" + (d / "trace.ndjson").string() + "\" --metrics-out \"" +
                            (d / "metrics.csv").string() + "\" > \"" + (d / "stdout.txt").string() + "\"";
    if (std::system(cmd.c_str()) != 0) ran = false;
  }
  bool same = ran;
  std::size_t bytes = 0;
  for (const char* f : {"trace.ndjson", "metrics.csv"}) {
    const std::string a = slurp(dir / "a" / f);
    const std::string b = slurp(dir / "b" / f);
    if (a.empty() || a != b) same = false;
    bytes += a.size();
  }
  fs::remove_all(dir);
  report(same, "cli_determinism",
         ran ? "trace and metrics byte-identical over " + std::to_string(bytes) + " bytes" : "CLI run failed");
}

}  // namespace

int main() {
  const SafetyRun run = shielded_batches();
  check_safety(run);
  check_unshielded();
  check_qp();
  check_cbf(run);
  check_minimality();
  check_buffer();
  check_kinematics();
  check_determinism();
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
