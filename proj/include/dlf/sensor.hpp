#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "dlf/geometry.hpp"
#include "dlf/lambda_core.hpp"
#include "dlf/particles.hpp"
#include "dlf/world.hpp"

namespace dlf {

struct SensorModel {
  int beam_count = 541;
  double fov = 1.5 * 3.14159265358979323846;  // rad, centred on the heading
  double max_range = 20.0;                    // m
  double error_area = 0.0225;                 // m^2, side sqrt(e) square around the endpoint
  double range_noise = 0.0;                   // m, Gaussian; off by default

  void validate() const;
  double angle_min() const { return -0.5 * fov; }
  double angle_increment() const { return beam_count > 1 ? fov / (beam_count - 1) : 0.0; }
  double error_side() const { return std::sqrt(error_area); }
};

struct LidarScan {
  double timestamp = 0.0;
  Pose2 pose;
  double max_range = 0.0;
  double angle_min = 0.0;  // relative to pose.heading
  double angle_increment = 0.0;
  std::vector<double> ranges;  // max_range marks a miss

  std::size_t size() const { return ranges.size(); }
  double angle(std::size_t i) const { return pose.heading + angle_min + static_cast<double>(i) * angle_increment; }
  bool is_hit(std::size_t i) const { return ranges[i] < max_range; }
  Vec2 endpoint(std::size_t i) const { return pose.position + ranges[i] * heading_vector(angle(i)); }
};

/// Casts every beam against the world. `rng` is only used when the model has range noise.
LidarScan cast_scan(const WorldState& world, const Pose2& pose, const SensorModel& model, double timestamp = 0.0,
                    Rng* rng = nullptr);

struct WeightedCell {
  CellIndex cell = 0;
  double weight = 0.0;  // share of the error region inside the cell
};

/// Error region of one hit: an axis-aligned square of side sqrt(e).
struct HitRegion {
  Vec2 center = Vec2::Zero();
  double side = 0.0;
  std::vector<WeightedCell> cells;
};

struct MissCell {
  CellIndex cell = 0;
  double count = 0.0;  // beams that crossed the cell
};

struct ScanClassification {
  std::vector<MissCell> misses;  // sorted by cell
  std::vector<HitRegion> hits;
};

/// Hit and miss cells of a scan. A beam's miss cells exclude the cells of its own error
/// region; endpoints outside the grid produce no hit region. Throws DomainError when the
/// pose lies outside the grid.
ScanClassification classify_cells(const LidarScan& scan, const LambdaGrid& grid, const SensorModel& model);

/// Scan log: one line per scan,
/// `timestamp x y heading max_range angle_min angle_increment n r_0 ... r_n-1`.
void write_scan(std::ostream& os, const LidarScan& scan);
std::optional<LidarScan> read_scan(std::istream& is);

}  // namespace dlf
