#include "hss/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <memory>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace hss {

void MetricsReport::add(const StepTrace& r) {
  ++records;
  if (r.intervened()) ++interventions;
  if (r.lat_vetoed) ++lateral_vetoes;
  if (r.slack > kSlackActiveTol) ++slack_events;
  speed_nano_sum += std::llround(r.state.speed * 1e9);
  min_headway = std::min(min_headway, r.headway);
  min_cbf_margin = std::min(min_cbf_margin, r.cbf_margin);
  max_slack = std::max(max_slack, r.slack);
}

void MetricsReport::merge(const MetricsReport& o) {
  episodes += o.episodes;
  crash_events += o.crash_events;
  crash_episodes += o.crash_episodes;
  failed_merges += o.failed_merges;
  records += o.records;
  interventions += o.interventions;
  lateral_vetoes += o.lateral_vetoes;
  slack_events += o.slack_events;
  speed_nano_sum += o.speed_nano_sum;
  min_headway = std::min(min_headway, o.min_headway);
  min_cbf_margin = std::min(min_cbf_margin, o.min_cbf_margin);
  max_slack = std::max(max_slack, o.max_slack);
}

double MetricsReport::average_speed() const {
  return records > 0 ? static_cast<double>(speed_nano_sum) * 1e-9 / static_cast<double>(records) : 0.0;
}

double MetricsReport::intervention_rate() const {
  return records > 0 ? static_cast<double>(interventions) / static_cast<double>(records) : 0.0;
}

double MetricsReport::crash_episode_rate() const {
  return episodes > 0 ? static_cast<double>(crash_episodes) / static_cast<double>(episodes) : 0.0;
}

MetricsReport merge(MetricsReport a, const MetricsReport& b) {
  a.merge(b);
  return a;
}

bool operator==(const MetricsReport& a, const MetricsReport& b) {
  return a.episodes == b.episodes && a.crash_events == b.crash_events &&
         a.crash_episodes == b.crash_episodes && a.failed_merges == b.failed_merges &&
         a.records == b.records && a.interventions == b.interventions &&
         a.lateral_vetoes == b.lateral_vetoes && a.slack_events == b.slack_events &&
         a.speed_nano_sum == b.speed_nano_sum && a.min_headway == b.min_headway &&
         a.min_cbf_margin == b.min_cbf_margin && a.max_slack == b.max_slack;
}

std::uint64_t policy_seed(std::uint64_t seed, int episode, int vehicle) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode), static_cast<std::uint32_t>(vehicle), 0x9e37u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

EpisodeResult run_episode(const ScenarioConfig& config, const std::string& policy,
                          std::uint64_t seed, int episode, const TraceSink& sink) {
  MergeEnv env(config);
  std::vector<Observation> obs = env.reset(seed, episode);
  std::vector<std::unique_ptr<Policy>> policies;
  for (std::size_t i = 0; i < env.agent_count(); ++i) {
    policies.push_back(make_policy(policy, policy_seed(seed, episode, env.vehicle_id(i))));
  }

  EpisodeResult result;
  result.vehicles = static_cast<int>(env.agent_count());
  std::vector<BehaviouralAction> actions(env.agent_count(), BehaviouralAction::kFollowLane);
  StepInfo info;
  while (!env.done()) {
    for (std::size_t i = 0; i < env.agent_count(); ++i) {
      actions[i] = env.status(i) == VehicleStatus::kActive
                       ? policies[i]->act(env.policy_input(i, obs[i]))
                       : BehaviouralAction::kFollowLane;
    }
    StepResult step = env.step(actions);
    for (const StepTrace& t : env.traces()) {
      result.report.add(t);
      if (sink) sink(t);
    }
    env.clear_traces();
    obs = std::move(step.observations);
    info = step.info;
  }
  result.steps = env.step_count();
  result.report.episodes = 1;
  result.report.crash_events = info.crash_count;
  result.report.crash_episodes = info.crash_count > 0 ? 1 : 0;
  result.report.failed_merges = info.failed_merges;
  result.min_headway = result.report.min_headway;
  return result;
}

BatchResult run_batch(const ScenarioConfig& config, const std::string& policy,
                      int episodes_per_seed, std::span<const std::uint64_t> seeds,
                      const TraceSink& sink) {
  if (episodes_per_seed < 1) throw std::invalid_argument("run_batch: episodes must be >= 1");
  if (seeds.empty()) throw std::invalid_argument("run_batch: at least one seed is required");
  make_policy(policy, 0);  // reject unknown names before any work

  BatchResult batch;
  for (std::uint64_t seed : seeds) {
    MetricsReport seed_report;
    for (int e = 0; e < episodes_per_seed; ++e) {
      EpisodeResult r;
      try {
        r = run_episode(config, policy, seed, e, sink);
      } catch (const std::exception& ex) {
        throw std::runtime_error("seed " + std::to_string(seed) + " episode " + std::to_string(e) +
                                 ": " + ex.what());
      }
      seed_report.merge(r.report);
      batch.headways.push_back(HeadwaySample{seed, e, r.min_headway});
    }
    batch.seeds.push_back(seed);
    batch.per_seed.push_back(seed_report);
    batch.total.merge(seed_report);
  }
  return batch;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, p);
}

namespace {

void write_metrics_row(std::ostream& out, const std::string& scope, const MetricsReport& m,
                       const ScenarioConfig& config, const std::string& policy) {
  out << scope << ',' << policy << ',' << to_string(config.episode.density) << ','
      << (config.episode.shield_enabled ? "on" : "off") << ',' << m.episodes << ','
      << m.crash_events << ',' << m.crash_episodes << ',' << format_number(m.crash_episode_rate())
      << ',' << format_number(m.average_speed()) << ',' << format_number(m.min_headway) << ','
      << m.failed_merges << ',' << format_number(m.intervention_rate()) << ',' << m.lateral_vetoes
      << ',' << m.slack_events << ',' << format_number(m.max_slack) << ','
      << format_number(m.min_cbf_margin) << ',' << m.records << '\n';
}

}  // namespace

void write_metrics_csv(std::ostream& out, const BatchResult& batch, const ScenarioConfig& config,
                       const std::string& policy) {
  out << "scope,policy,density,shield,episodes,crash_count,crash_episodes,crash_episode_rate,"
         "avg_speed,min_headway,failed_merges,intervention_rate,lateral_vetoes,slack_events,"
         "max_slack,min_cbf_margin,records\n";
  for (std::size_t i = 0; i < batch.seeds.size(); ++i) {
    write_metrics_row(out, "seed:" + std::to_string(batch.seeds[i]), batch.per_seed[i], config, policy);
  }
  write_metrics_row(out, "all", batch.total, config, policy);
}

std::vector<HeadwaySample> headway_samples(std::span<const StepTrace> traces) {
  std::map<std::pair<std::uint64_t, int>, double> mins;
  for (const auto& t : traces) {
    auto [it, fresh] = mins.try_emplace({t.seed, t.episode}, t.headway);
    if (!fresh) it->second = std::min(it->second, t.headway);
  }
  std::vector<HeadwaySample> out;
  for (const auto& [key, h] : mins) out.push_back(HeadwaySample{key.first, key.second, h});
  return out;
}

std::vector<HeadwayEpoch> headway_series(std::span<const HeadwaySample> samples, int epoch_size) {
  if (epoch_size < 1) throw std::invalid_argument("headway_series: epoch_size must be >= 1");
  // epoch -> seed -> minimum
  std::map<int, std::map<std::uint64_t, double>> grid;
  for (const auto& s : samples) {
    if (!std::isfinite(s.min_headway)) continue;
    auto& cell = grid[s.episode / epoch_size];
    auto [it, fresh] = cell.try_emplace(s.seed, s.min_headway);
    if (!fresh) it->second = std::min(it->second, s.min_headway);
  }
  std::vector<HeadwayEpoch> out;
  for (const auto& [epoch, per_seed] : grid) {
    HeadwayEpoch row;
    row.epoch = epoch;
    row.lo = std::numeric_limits<double>::infinity();
    row.hi = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const auto& [seed, h] : per_seed) {
      sum += h;
      row.lo = std::min(row.lo, h);
      row.hi = std::max(row.hi, h);
    }
    row.mean_min = per_seed.size() == 1 ? row.lo : sum / static_cast<double>(per_seed.size());
    out.push_back(row);
  }
  return out;
}

void write_headway_csv(std::ostream& out, std::span<const HeadwayEpoch> series) {
  out << "epoch,min_headway,min_headway_lo,min_headway_hi\n";
  for (const auto& r : series) {
    out << r.epoch << ',' << format_number(r.mean_min) << ',' << format_number(r.lo) << ','
        << format_number(r.hi) << '\n';
  }
}

namespace {

using ojson = nlohmann::ordered_json;

ojson number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

double read_number(const ojson& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw std::runtime_error("trace: expected a number, got " + j.dump());
}

}  // namespace

void write_trace_header(std::ostream& out) {
  ojson h;
  h["schema"] = kTraceSchema;
  h["version"] = kTraceVersion;
  out << h.dump() << '\n';
}

void write_trace_record(std::ostream& out, const StepTrace& t) {
  ojson j;
  j["seed"] = t.seed;
  j["episode"] = t.episode;
  j["step"] = t.step;
  j["substep"] = t.substep;
  j["vehicle"] = t.vehicle;
  j["x"] = number(t.state.x);
  j["y"] = number(t.state.y);
  j["vx"] = number(t.state.vx);
  j["vy"] = number(t.state.vy);
  j["psi"] = number(t.state.psi);
  j["speed"] = number(t.state.speed);
  j["lane"] = t.lane;
  j["target_lane"] = t.target_lane;
  j["a_ll"] = number(t.raw.accel);
  j["delta_ll"] = number(t.raw.steering);
  j["a_safe"] = number(t.safe.accel);
  j["delta_safe"] = number(t.safe.steering);
  j["lon_corrected"] = t.lon_corrected;
  j["lat_vetoed"] = t.lat_vetoed;
  j["h_ol"] = number(t.h_ol);
  j["h_otl"] = number(t.h_otl);
  j["h_otr"] = number(t.h_otr);
  j["slack"] = number(t.slack);
  j["headway"] = number(t.headway);
  j["cbf_margin"] = number(t.cbf_margin);
  j["crashed"] = t.crashed;
  out << j.dump() << '\n';
}

void export_traces(std::ostream& out, std::span<const StepTrace> traces) {
  write_trace_header(out);
  for (const auto& t : traces) write_trace_record(out, t);
}

std::vector<StepTrace> read_traces(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace: missing header line");
  try {
    const ojson h = ojson::parse(line);
    if (h.at("schema") != kTraceSchema || h.at("version") != kTraceVersion) {
      throw std::runtime_error("trace: unsupported schema " + line);
    }
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("trace: bad header: ") + e.what());
  }

  std::vector<StepTrace> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const ojson j = ojson::parse(line);
      StepTrace t;
      t.seed = j.at("seed").get<std::uint64_t>();
      t.episode = j.at("episode").get<int>();
      t.step = j.at("step").get<int>();
      t.substep = j.at("substep").get<int>();
      t.vehicle = j.at("vehicle").get<int>();
      t.state.x = read_number(j.at("x"));
      t.state.y = read_number(j.at("y"));
      t.state.vx = read_number(j.at("vx"));
      t.state.vy = read_number(j.at("vy"));
      t.state.psi = read_number(j.at("psi"));
      t.state.speed = read_number(j.at("speed"));
      t.lane = j.at("lane").get<int>();
      t.target_lane = j.at("target_lane").get<int>();
      t.raw.accel = read_number(j.at("a_ll"));
      t.raw.steering = read_number(j.at("delta_ll"));
      t.safe.accel = read_number(j.at("a_safe"));
      t.safe.steering = read_number(j.at("delta_safe"));
      t.lon_corrected = j.at("lon_corrected").get<bool>();
      t.lat_vetoed = j.at("lat_vetoed").get<bool>();
      t.h_ol = read_number(j.at("h_ol"));
      t.h_otl = read_number(j.at("h_otl"));
      t.h_otr = read_number(j.at("h_otr"));
      t.slack = read_number(j.at("slack"));
      t.headway = read_number(j.at("headway"));
      t.cbf_margin = read_number(j.at("cbf_margin"));
      t.crashed = j.at("crashed").get<bool>();
      out.push_back(t);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace hss
