#include "hss/scenario_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <system_error>

#include "hss/errors.hpp"

namespace hss {

Density parse_density(const std::string& name) {
  if (name == "light") return Density::kLight;
  if (name == "moderate") return Density::kModerate;
  throw ConfigError("unknown density '" + name + "' (expected light|moderate)");
}

const char* to_string(Density density) {
  return density == Density::kLight ? "light" : "moderate";
}

DensityBand density_band(Density density) {
  return density == Density::kLight ? DensityBand{2, 6} : DensityBand{4, 8};
}

void validate(const ScenarioConfig& c) {
  build_merging_layout(c.road);
  validate(c.shield);
  if (!(c.geometry.length > 0.0 && c.geometry.width > 0.0)) {
    throw ConfigError("vehicle geometry must be positive");
  }
  if (c.geometry.width >= c.road.lane_width) throw ConfigError("vehicle wider than a lane");
  if (c.limits.a_min != c.shield.a_min || c.limits.a_max != c.shield.a_max ||
      c.limits.v_abs_max != c.shield.v_abs_max) {
    throw ConfigError("vehicle limits and shield limits disagree");
  }
  if (c.controller.max_travel_angle > c.shield.travel_angle_bound) {
    throw ConfigError("controller.max_travel_angle exceeds shield.travel_angle_bound");
  }
  if (!(c.limits.steering_max > 0.0 && c.limits.steering_max < 1.5707963267948966)) {
    throw ConfigError("steering_max must lie in (0, pi/2)");
  }
  const auto& e = c.episode;
  if (e.max_steps < 1 || e.max_steps_after_merge < 1) throw ConfigError("episode horizon must be >= 1");
  if (e.motion_steps_per_decision < 1) throw ConfigError("motion_steps_per_decision must be >= 1");
  if (!(e.spawn_spacing > 0.0 && e.spawn_region > 0.0)) throw ConfigError("spawn geometry must be positive");
  if (e.highway_speed_min > e.highway_speed_max || e.ramp_speed_min > e.ramp_speed_max ||
      e.highway_speed_min < 0.0 || e.ramp_speed_min < 0.0 ||
      e.highway_speed_max > c.limits.v_abs_max || e.ramp_speed_max > c.limits.v_abs_max) {
    throw ConfigError("initial speed bands must lie inside [0, v_abs_max]");
  }
  const auto& r = c.reward;
  if (r.w_c < 0.0 || r.w_s < 0.0 || r.w_h < 0.0 || r.w_m < 0.0) throw ConfigError("reward weights must be >= 0");
  if (!(r.speed_high > r.speed_low)) throw ConfigError("reward speed band is empty");
  if (!(r.headway_reference > 0.0 && r.merge_time_reference > 0.0)) {
    throw ConfigError("reward references must be positive");
  }
  if (!(c.controller.k_v > 0.0 && c.controller.k_y > 0.0 && c.controller.v_floor > 0.0)) {
    throw ConfigError("controller gains must be positive");
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("not a number: '" + v + "'");
  return out;
}

long long to_integer(const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError("not an integer: '" + v + "'");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError("not a boolean: '" + v + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

struct Field {
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

template <typename Getter>
Field real(Getter ref) {
  return {[ref](ScenarioConfig& c, const std::string& v) { ref(c) = to_double(v); },
          [ref](const ScenarioConfig& c) { return format_double(ref(const_cast<ScenarioConfig&>(c))); }};
}

template <typename Getter>
Field integer(Getter ref) {
  return {[ref](ScenarioConfig& c, const std::string& v) {
            using T = std::remove_reference_t<decltype(ref(c))>;
            const long long x = to_integer(v);
            if (x < 0) throw ConfigError("negative value '" + v + "'");
            ref(c) = static_cast<T>(x);
          },
          [ref](const ScenarioConfig& c) {
            return std::to_string(ref(const_cast<ScenarioConfig&>(c)));
          }};
}

template <typename Getter>
Field boolean(Getter ref) {
  return {[ref](ScenarioConfig& c, const std::string& v) { ref(c) = to_bool(v); },
          [ref](const ScenarioConfig& c) {
            return std::string(ref(const_cast<ScenarioConfig&>(c)) ? "true" : "false");
          }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["road.entry_length"] = real([](ScenarioConfig& c) -> double& { return c.road.entry_length; });
    t["road.ramp_length"] = real([](ScenarioConfig& c) -> double& { return c.road.ramp_length; });
    t["road.merge_length"] = real([](ScenarioConfig& c) -> double& { return c.road.merge_length; });
    t["road.exit_length"] = real([](ScenarioConfig& c) -> double& { return c.road.exit_length; });
    t["road.lane_width"] = real([](ScenarioConfig& c) -> double& { return c.road.lane_width; });
    t["road.perception_range"] = real([](ScenarioConfig& c) -> double& { return c.road.perception_range; });
    t["road.lane_hysteresis"] = real([](ScenarioConfig& c) -> double& { return c.road.lane_hysteresis; });

    t["vehicle.length"] = real([](ScenarioConfig& c) -> double& { return c.geometry.length; });
    t["vehicle.width"] = real([](ScenarioConfig& c) -> double& { return c.geometry.width; });
    t["vehicle.steering_max"] = real([](ScenarioConfig& c) -> double& { return c.limits.steering_max; });
    // Acceleration and speed limits are shared by the vehicle model and the shield.
    t["vehicle.a_min"] = {[](ScenarioConfig& c, const std::string& v) { c.limits.a_min = c.shield.a_min = to_double(v); },
                          [](const ScenarioConfig& c) { return format_double(c.limits.a_min); }};
    t["vehicle.a_max"] = {[](ScenarioConfig& c, const std::string& v) { c.limits.a_max = c.shield.a_max = to_double(v); },
                          [](const ScenarioConfig& c) { return format_double(c.limits.a_max); }};
    t["vehicle.v_abs_max"] = {[](ScenarioConfig& c, const std::string& v) { c.limits.v_abs_max = c.shield.v_abs_max = to_double(v); },
                              [](const ScenarioConfig& c) { return format_double(c.limits.v_abs_max); }};

    t["shield.tau"] = real([](ScenarioConfig& c) -> double& { return c.shield.tau; });
    t["shield.eta"] = real([](ScenarioConfig& c) -> double& { return c.shield.eta; });
    t["shield.slack_penalty"] = real([](ScenarioConfig& c) -> double& { return c.shield.slack_penalty; });
    t["shield.dt"] = real([](ScenarioConfig& c) -> double& { return c.shield.dt; });
    t["shield.worst_case_leader_accel"] = real([](ScenarioConfig& c) -> double& { return c.shield.worst_case_leader_accel; });
    t["shield.worst_case_rear_accel"] = real([](ScenarioConfig& c) -> double& { return c.shield.worst_case_rear_accel; });
    t["shield.headway_floor"] = real([](ScenarioConfig& c) -> double& { return c.shield.headway_floor; });
    t["shield.buffer_accel_margin"] = real([](ScenarioConfig& c) -> double& { return c.shield.buffer_accel_margin; });
    t["shield.recovery_guard"] = boolean([](ScenarioConfig& c) -> bool& { return c.shield.recovery_guard; });
    t["shield.travel_angle_bound"] = real([](ScenarioConfig& c) -> double& { return c.shield.travel_angle_bound; });

    t["controller.k_v"] = real([](ScenarioConfig& c) -> double& { return c.controller.k_v; });
    t["controller.k_y"] = real([](ScenarioConfig& c) -> double& { return c.controller.k_y; });
    t["controller.v_floor"] = real([](ScenarioConfig& c) -> double& { return c.controller.v_floor; });
    t["controller.speed_step"] = real([](ScenarioConfig& c) -> double& { return c.controller.speed_step; });
    t["controller.max_travel_angle"] = real([](ScenarioConfig& c) -> double& { return c.controller.max_travel_angle; });

    t["reward.w_c"] = real([](ScenarioConfig& c) -> double& { return c.reward.w_c; });
    t["reward.w_s"] = real([](ScenarioConfig& c) -> double& { return c.reward.w_s; });
    t["reward.w_h"] = real([](ScenarioConfig& c) -> double& { return c.reward.w_h; });
    t["reward.w_m"] = real([](ScenarioConfig& c) -> double& { return c.reward.w_m; });
    t["reward.speed_low"] = real([](ScenarioConfig& c) -> double& { return c.reward.speed_low; });
    t["reward.speed_high"] = real([](ScenarioConfig& c) -> double& { return c.reward.speed_high; });
    t["reward.headway_reference"] = real([](ScenarioConfig& c) -> double& { return c.reward.headway_reference; });
    t["reward.merge_time_reference"] = real([](ScenarioConfig& c) -> double& { return c.reward.merge_time_reference; });

    t["episode.density"] = {[](ScenarioConfig& c, const std::string& v) { c.episode.density = parse_density(v); },
                            [](const ScenarioConfig& c) { return std::string(to_string(c.episode.density)); }};
    t["episode.seed"] = integer([](ScenarioConfig& c) -> std::uint64_t& { return c.episode.seed; });
    t["episode.max_steps_after_merge"] = integer([](ScenarioConfig& c) -> int& { return c.episode.max_steps_after_merge; });
    t["episode.max_steps"] = integer([](ScenarioConfig& c) -> int& { return c.episode.max_steps; });
    t["episode.spawn_spacing"] = real([](ScenarioConfig& c) -> double& { return c.episode.spawn_spacing; });
    t["episode.spawn_region"] = real([](ScenarioConfig& c) -> double& { return c.episode.spawn_region; });
    t["episode.highway_speed_min"] = real([](ScenarioConfig& c) -> double& { return c.episode.highway_speed_min; });
    t["episode.highway_speed_max"] = real([](ScenarioConfig& c) -> double& { return c.episode.highway_speed_max; });
    t["episode.ramp_speed_min"] = real([](ScenarioConfig& c) -> double& { return c.episode.ramp_speed_min; });
    t["episode.ramp_speed_max"] = real([](ScenarioConfig& c) -> double& { return c.episode.ramp_speed_max; });
    t["episode.motion_steps_per_decision"] = integer([](ScenarioConfig& c) -> int& { return c.episode.motion_steps_per_decision; });
    t["episode.observed_vehicles"] = integer([](ScenarioConfig& c) -> std::size_t& { return c.episode.observed_vehicles; });
    t["episode.shield_enabled"] = boolean([](ScenarioConfig& c) -> bool& { return c.episode.shield_enabled; });
    t["episode.end_on_crash"] = boolean([](ScenarioConfig& c) -> bool& { return c.episode.end_on_crash; });

    t["policy.name"] = {[](ScenarioConfig& c, const std::string& v) { c.policy = v; },
                        [](const ScenarioConfig& c) { return c.policy; }};
    return t;
  }();
  return table;
}

}  // namespace

ScenarioConfig parse_scenario(std::istream& in, ScenarioConfig config) {
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const auto where = "line " + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    try {
      it->second.set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + key + ": " + e.what());
    }
  }
  validate(config);
  return config;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
  try {
    return parse_scenario(in);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void write_scenario(std::ostream& out, const ScenarioConfig& config) {
  for (const auto& [key, field] : fields()) out << key << " = " << field.get(config) << '\n';
}

}  // namespace hss
