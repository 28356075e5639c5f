#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>

#include "hss/behavior.hpp"
#include "hss/road_topology.hpp"
#include "hss/shield_config.hpp"
#include "hss/vehicle_model.hpp"

namespace hss {

enum class Density { kLight, kModerate };

/// "light" or "moderate"; throws ConfigError otherwise.
Density parse_density(const std::string& name);
const char* to_string(Density density);

struct DensityBand {
  int min_vehicles = 0;
  int max_vehicles = 0;
};

/// Light: 2-6 vehicles. Moderate: 4-8 vehicles.
DensityBand density_band(Density density);

struct RewardConfig {
  double w_c = 200.0;
  double w_s = 1.0;
  double w_h = 4.0;
  double w_m = 4.0;
  double speed_low = 20.0;   // r_s ramps from 0 at speed_low to 1 at speed_high
  double speed_high = 30.0;
  double headway_reference = 0.5;  // s; r_h is zero at and above this headway
  double merge_time_reference = 10.0;  // s of ramp time that costs the full r_m
};

struct EpisodeConfig {
  Density density = Density::kModerate;
  std::uint64_t seed = 0;
  int max_steps_after_merge = 100;  // behavioural steps once no vehicle is left on the ramp
  int max_steps = 300;              // hard cap on behavioural steps
  double spawn_spacing = 50.0;
  double spawn_region = 320.0;
  double highway_speed_min = 25.0;
  double highway_speed_max = 30.0;
  double ramp_speed_min = 10.0;
  double ramp_speed_max = 15.0;
  int motion_steps_per_decision = 3;  // 15 Hz motion planning under a 5 Hz behavioural layer
  std::size_t observed_vehicles = kDefaultObservedVehicles;
  bool shield_enabled = true;
  bool end_on_crash = true;
};

/// Everything needed to run a merging episode.
struct ScenarioConfig {
  RoadConfig road;
  VehicleGeometry geometry;
  VehicleLimits limits;
  ShieldConfig shield;
  ControllerConfig controller;
  RewardConfig reward;
  EpisodeConfig episode;
  std::string policy = "random";
};

/// Cross-field validation; throws ConfigError.
void validate(const ScenarioConfig& config);

/// Parses `key = value` lines; '#' starts a comment. Keys are dotted, e.g.
/// `road.merge_length = 100` or `shield.eta = 0.0325`. Unknown keys, bad
/// values and duplicate keys raise ConfigError naming the line.
ScenarioConfig parse_scenario(std::istream& in, ScenarioConfig base = {});
ScenarioConfig load_scenario(const std::string& path);

/// Writes every key in the format parse_scenario reads.
void write_scenario(std::ostream& out, const ScenarioConfig& config);

}  // namespace hss
