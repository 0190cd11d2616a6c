#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "dlf/footprint.hpp"
#include "dlf/lambda_core.hpp"
#include "dlf/particles.hpp"
#include "dlf/sensor.hpp"
#include "dlf/velocity_field.hpp"

namespace dlf {

/// Dynamic summary of the cells around one obstacle.
struct RegionEstimate {
  std::array<double, kNumDynamicKinds> mass{};  // sum of da * per-kind lambda over the region
  std::array<double, kNumDynamicKinds> kind_probability{0.5, 0.5};
  std::optional<CellVelocityDistribution> velocity;
  int cells = 0;
};

/// The particle-backed intensity field. Static cells are held as per-cell hit/miss
/// accumulators, dynamic obstacles as a particle population in world coordinates. The
/// grid is axis-aligned and scrolled by whole cells to stay centred on the robot.
///
/// One mapping cycle is evolve -> update -> resample. `snapshot()` is the field computed
/// by the last update and stays valid until the next one.
class DynamicLambdaField {
 public:
  DynamicLambdaField(int width, int height, double cell_size, const MappingConfig& config, double error_area,
                     const Vec2& center = Vec2::Zero());

  const MappingConfig& config() const { return config_; }
  double error_area() const { return error_area_; }
  const LambdaGrid& snapshot() const { return snapshot_; }
  /// Raw static intensities (no membership weighting).
  const LambdaGrid& static_field() const { return static_field_; }
  /// Static intensities accumulated without the hit override: high where the static
  /// particle keeps explaining hits on its own, low where a dynamic obstacle passed.
  /// Particle existence is charged against this field.
  const LambdaGrid& exposure_field() const { return exposure_field_; }
  std::span<const Particle> particles() const { return particles_; }
  double static_hits(CellIndex c) const { return static_hit_[static_cast<std::size_t>(c)]; }
  double static_misses(CellIndex c) const { return static_miss_[static_cast<std::size_t>(c)]; }
  /// (particle, cell) occupancy pairs of the last update.
  std::size_t pair_count() const { return last_pairs_; }

  /// Scrolls the grid so that `p` falls in the central cell.
  void recenter(const Vec2& p);

  /// Moves every particle one cycle forward.
  void evolve(Rng& rng);

  /// Measurement update: accumulates hits and misses, re-estimates intensities, computes
  /// resampling and birth weights and rebuilds the snapshot.
  void update(const ScanClassification& scan);

  /// Draws the next population from the weights of the last update.
  void resample(Rng& rng);

  /// Aggregates the snapshot over the cells whose centres lie within `margin` of `convex`.
  RegionEstimate estimate_region(const Polygon& convex, double margin) const;

  /// Replaces the population, e.g. to seed a benchmark.
  void set_particles(std::vector<Particle> particles);

  /// One line per particle: kind, position, velocity, lambda, h, m, existence.
  void write_particles(std::ostream& os) const;
  /// Per dynamic cell, the weighted heading histogram of its particles (36 bins from -pi).
  void write_polar(std::ostream& os) const;

 private:
  void build_occupancy();
  double static_lambda(CellIndex c) const;
  double exposure_lambda(CellIndex c) const;
  /// Memberships of the occupants of cell c, static first, into `out`.
  void memberships(CellIndex c, double static_lambda, std::vector<double>& out) const;

  MappingConfig config_;
  double error_area_;
  LambdaGrid static_field_;
  LambdaGrid exposure_field_;
  LambdaGrid snapshot_;
  std::vector<double> static_hit_;
  std::vector<double> persistent_hit_;
  std::vector<double> static_miss_;
  std::vector<VelocityMoments> cell_moments_;

  std::vector<Particle> particles_;
  std::vector<double> existence_;

  // Cell-major occupancy: occupants of cell c are pair_particle_[cell_begin_[c] .. cell_begin_[c+1]).
  std::vector<std::uint32_t> cell_begin_;
  std::vector<std::uint32_t> pair_particle_;
  std::vector<double> pair_weight_;  // lambda * membership * existence after the update
  std::vector<CellIndex> occupied_cells_;

  ResampleTable table_;
  std::vector<BirthSite> sites_;
  std::size_t last_pairs_ = 0;
  const FootprintTable* footprints_;
};

}  // namespace dlf
