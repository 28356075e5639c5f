#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hss/environment.hpp"
#include "hss/scenario_config.hpp"

namespace hss {

/// Additive batch metrics. Every field merges by sum, min or max, and the
/// speed total is kept in integer nano-m/s, so merging is exactly associative.
struct MetricsReport {
  std::int64_t episodes = 0;
  std::int64_t crash_events = 0;    // colliding pairs
  std::int64_t crash_episodes = 0;  // episodes with at least one collision
  std::int64_t failed_merges = 0;
  std::int64_t records = 0;         // (vehicle, sub-step) records
  std::int64_t interventions = 0;
  std::int64_t lateral_vetoes = 0;
  std::int64_t slack_events = 0;
  std::int64_t speed_nano_sum = 0;  // sum of post-step speeds in 1e-9 m/s
  double min_headway = std::numeric_limits<double>::infinity();
  double min_cbf_margin = std::numeric_limits<double>::infinity();
  double max_slack = 0.0;

  void add(const StepTrace& record);
  void merge(const MetricsReport& other);

  double average_speed() const;
  double intervention_rate() const;
  double crash_episode_rate() const;
};

MetricsReport merge(MetricsReport a, const MetricsReport& b);
bool operator==(const MetricsReport& a, const MetricsReport& b);

/// Deterministic per-vehicle policy seed for (seed, episode, vehicle).
std::uint64_t policy_seed(std::uint64_t seed, int episode, int vehicle);

struct EpisodeResult {
  MetricsReport report;
  double min_headway = std::numeric_limits<double>::infinity();
  int steps = 0;
  int vehicles = 0;
};

using TraceSink = std::function<void(const StepTrace&)>;

/// Runs one episode with one policy instance per vehicle. Every trace record
/// is passed to `sink` when given.
EpisodeResult run_episode(const ScenarioConfig& config, const std::string& policy,
                          std::uint64_t seed, int episode, const TraceSink& sink = {});

struct HeadwaySample {
  std::uint64_t seed = 0;
  int episode = 0;
  double min_headway = std::numeric_limits<double>::infinity();
};

struct BatchResult {
  MetricsReport total;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricsReport> per_seed;
  std::vector<HeadwaySample> headways;  // one per episode, ordered by (seed, episode)
};

/// Runs `episodes_per_seed` episodes for every seed, in (seed, episode) order.
/// Throws std::invalid_argument for episodes_per_seed < 1 or no seeds; errors
/// inside an episode are rethrown with the seed and episode attached.
BatchResult run_batch(const ScenarioConfig& config, const std::string& policy,
                      int episodes_per_seed, std::span<const std::uint64_t> seeds,
                      const TraceSink& sink = {});

/// Metrics as CSV: a header, one row per seed, then an "all" row.
void write_metrics_csv(std::ostream& out, const BatchResult& batch, const ScenarioConfig& config,
                       const std::string& policy);

struct HeadwayEpoch {
  int epoch = 0;
  double mean_min = 0.0;  // mean over seeds of the per-seed epoch minimum
  double lo = 0.0;        // smallest per-seed epoch minimum
  double hi = 0.0;        // largest per-seed epoch minimum
};

/// Per-episode minimum headway from raw trace records.
std::vector<HeadwaySample> headway_samples(std::span<const StepTrace> traces);

/// Groups episodes into epochs of `epoch_size` and summarises them across
/// seeds. Episodes without any finite headway are skipped.
std::vector<HeadwayEpoch> headway_series(std::span<const HeadwaySample> samples, int epoch_size);

void write_headway_csv(std::ostream& out, std::span<const HeadwayEpoch> series);

// Trace files: one JSON object per line after a schema header line. Non-finite
// numbers are written as the strings "inf", "-inf" and "nan".
inline constexpr const char* kTraceSchema = "hss-trace";
inline constexpr int kTraceVersion = 1;

void write_trace_header(std::ostream& out);
void write_trace_record(std::ostream& out, const StepTrace& record);
void export_traces(std::ostream& out, std::span<const StepTrace> traces);

/// Throws std::runtime_error on a missing or mismatched header or a malformed line.
std::vector<StepTrace> read_traces(std::istream& in);

/// Formats a double as the shortest text that reads back to the same value.
std::string format_number(double value);

}  // namespace hss
