// Batch runner for shielded on-ramp merging episodes.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hss/errors.hpp"
#include "hss/harness.hpp"
#include "hss/scenario_config.hpp"

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Run batches of on-ramp merging episodes under the hybrid safety shield."};

  std::string scenario_path;
  std::optional<std::string> policy;
  std::optional<std::string> density;
  int episodes = 100;
  std::vector<std::uint64_t> seeds{0};
  std::optional<std::string> shield;
  std::string trace_out;
  std::string metrics_out;
  std::string headway_out;
  int epoch_size = 20;

  app.add_option("--scenario", scenario_path, "Scenario file with key = value lines")
      ->check(CLI::ExistingFile);
  app.add_option("--policy", policy, "random | keep_lane_cruise | aggressive_merger | shy_merger")
      ->check(CLI::IsMember(hss::policy_names()));
  app.add_option("--density", density, "Traffic density")->check(CLI::IsMember({"light", "moderate"}));
  app.add_option("--episodes", episodes, "Episodes per seed")->check(CLI::PositiveNumber);
  app.add_option("--seeds", seeds, "Comma-separated seeds")->delimiter(',');
  app.add_option("--shield", shield, "Enable the safety shield")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--trace-out", trace_out, "Write per-sub-step trace records (NDJSON)");
  app.add_option("--metrics-out", metrics_out, "Write batch metrics (CSV)");
  app.add_option("--headway-out", headway_out, "Write the minimum-headway series (CSV)");
  app.add_option("--epoch-size", epoch_size, "Episodes per headway epoch")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    hss::ScenarioConfig config;
    if (!scenario_path.empty()) config = hss::load_scenario(scenario_path);
    if (policy) config.policy = *policy;
    if (density) config.episode.density = hss::parse_density(*density);
    if (shield) config.episode.shield_enabled = *shield == "on";
    hss::validate(config);

    std::ofstream trace_file;
    hss::TraceSink sink;
    if (!trace_out.empty()) {
      trace_file = open_out(trace_out);
      hss::write_trace_header(trace_file);
      sink = [&trace_file](const hss::StepTrace& t) { hss::write_trace_record(trace_file, t); };
    }

    const hss::BatchResult batch = hss::run_batch(config, config.policy, episodes, seeds, sink);

    if (!metrics_out.empty()) {
      auto out = open_out(metrics_out);
      hss::write_metrics_csv(out, batch, config, config.policy);
    }
    if (!headway_out.empty()) {
      auto out = open_out(headway_out);
      const auto series = hss::headway_series(batch.headways, epoch_size);
      hss::write_headway_csv(out, series);
    }

    const auto& m = batch.total;
    std::cout << "episodes=" << m.episodes << " crash_count=" << m.crash_events
              << " crash_episodes=" << m.crash_episodes
              << " avg_speed=" << hss::format_number(m.average_speed())
              << " min_headway=" << hss::format_number(m.min_headway)
              << " failed_merges=" << m.failed_merges
              << " intervention_rate=" << hss::format_number(m.intervention_rate())
              << " slack_events=" << m.slack_events << '\n';
  } catch (const hss::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
