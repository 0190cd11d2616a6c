#pragma once

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

#include "dlf/mapper.hpp"
#include "dlf/scenario.hpp"

namespace dlf {

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // nothing is written without it
  std::optional<std::uint64_t> seed;             // overrides run.seed
  std::optional<int> snapshot_every;             // overrides run.snapshot_every
  bool write_risk = true;                        // per-candidate risk export
  bool write_scans = true;                       // scan log
};

struct CycleRecord {
  int cycle = 0;
  double time = 0.0;
  Pose2 pose;
  double speed = 0.0;
  Command command;
  double risk = 0.0;
  double collision_probability = 0.0;
  bool feasible = true;
  bool collision = false;
  double goal_distance = 0.0;
  std::size_t particles = 0;
};

struct TrackRecord {
  int cycle = 0;
  double time = 0.0;
  std::size_t agent = 0;
  AgentTruth truth;
  RegionEstimate estimate;
};

/// Wall-clock milliseconds per pipeline stage of one cycle.
struct StageTiming {
  double evolve = 0.0;
  double sense = 0.0;  // ray casting and cell classification
  double update = 0.0;
  double resample = 0.0;
  double plan = 0.0;
  double mapping() const { return evolve + sense + update + resample; }
  double total() const { return mapping() + plan; }
};

struct RunMetrics {
  std::vector<CycleRecord> cycles;
  std::vector<TrackRecord> tracks;
  std::vector<StageTiming> timing;
  bool collided = false;
  bool goal_reached = false;
  double goal_time = -1.0;
};

/// Runs a scenario to its duration, a collision, or goal arrival when run.stop_at_goal is
/// set. One cycle: recenter, evolve, scan, update, plan, resample, step the world.
RunMetrics run_scenario(const Scenario& scenario, const RunOptions& options = {});

void write_metrics_csv(std::ostream& os, const RunMetrics& m);
void write_tracks_csv(std::ostream& os, const RunMetrics& m);
void write_timing_csv(std::ostream& os, const RunMetrics& m);
void write_summary(std::ostream& os, const Scenario& scenario, const RunMetrics& m);

/// Writes snapshot_<cycle>.txt (grid export), polar_<cycle>.csv and particles_<cycle>.csv.
void emit_snapshot(const DynamicLambdaField& field, int cycle, const std::filesystem::path& dir);

/// Mapping-only replay of a scan log with the scenario's grid and mapping settings.
/// Returns the final field.
DynamicLambdaField replay_scans(const Scenario& scenario, std::istream& log, std::uint64_t seed,
                                const std::optional<std::filesystem::path>& snapshot_dir = std::nullopt);

struct BenchReport {
  std::size_t particles = 0;
  std::size_t pairs = 0;
  int cycles = 0;
  StageTiming median;  // per-stage medians
  double median_mapping = 0.0;
  double median_total = 0.0;
};

/// Times mapping cycles on a 200 x 200 grid with a busy street scene at a given population.
BenchReport bench(std::size_t particles, int cycles = 20, std::uint64_t seed = 1, bool with_planner = true);
void write_bench(std::ostream& os, const BenchReport& r);

}  // namespace dlf
