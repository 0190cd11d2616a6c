#pragma once

#include <Eigen/Core>

#include <random>
#include <span>
#include <vector>

#include "dlf/geometry.hpp"
#include "dlf/lambda_core.hpp"
#include "dlf/types.hpp"

namespace dlf {

using Rng = std::mt19937_64;

/// One obstacle hypothesis. Static cells are represented by the mapper's per-cell
/// accumulators; this type carries the dynamic population.
struct Particle {
  ObstacleKind kind = ObstacleKind::Pedestrian;
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double intensity = 0.0;        // 1/m^2
  double hit_sum = 0.0;          // h_i
  double miss_sum = 0.0;         // m_i
  double static_exposure = 0.0;  // sum of da * static lambda over crossed cells
  double last_hit_age = 0.0;     // s since the last hit

  double speed() const { return velocity.norm(); }
  double heading() const { return velocity.squaredNorm() > 0.0 ? std::atan2(velocity.y(), velocity.x()) : 0.0; }
};

struct MappingConfig {
  double tau = 8.0;                      // existence decay rate, 1/s
  double gamma = 0.1;                    // birth proportion
  double dt = 0.1;                       // cycle period, s
  std::size_t population_size = 20000;   // dynamic particles
  double resample_velocity_noise = 0.3;  // m/s
  double kind_switch_probability = 0.01;
  double lambda_max = kLambdaMax;
  double lambda_prior = 0.0;  // static intensity of never-observed cells

  void validate() const;
};

enum class MeasurementEvent { Hit, Miss };

/// Constant-velocity step with Gaussian acceleration. `accel` is the sampled acceleration;
/// speed is clamped to the kind's maximum and the static exposure grows by da * lambda
/// for every cell newly covered by the footprint or crossed by the centre. `static_field`
/// holds the static intensities in its static layer.
Particle evolve(Particle p, double dt, const Vec2& accel, const LambdaGrid& static_field);
Particle evolve(Particle p, double dt, const LambdaGrid& static_field, Rng& rng);

/// Probability that each particle is the single obstacle of a cell given all cell
/// occupants' intensities: proportional to exp(lambda * da) - 1, normalized. All-zero
/// intensities yield a uniform distribution.
Eigen::ArrayXd membership_probabilities(const Eigen::Ref<const Eigen::ArrayXd>& lambdas, double area);

/// exp(-static_exposure) * exp(-tau * last_hit_age).
double existence_probability(const Particle& p, double tau);

/// Adds membership * existence to the hit or miss sum. A positive hit resets the hit age
/// when `renews` is set.
Particle accumulate_measurement(Particle p, MeasurementEvent event, double membership, double existence,
                                bool renews = true);

/// lambda = ln(1 + h / m) / e clamped to [0, lambda_max]; 0 without hits, lambda_max
/// for hits without misses.
double estimate_intensity(double hit_sum, double miss_sum, double error_area, double lambda_max = kLambdaMax);

/// Sum of lambda_i * P(p_i in c) * P(e_i) over the cell occupants.
double expected_cell_lambda(const Eigen::Ref<const Eigen::ArrayXd>& lambdas,
                            const Eigen::Ref<const Eigen::ArrayXd>& existences, double area);

/// Particle-list form; the list must contain one StaticCell particle.
double expected_cell_lambda(std::span<const Particle> occupants, double area, double tau);

/// Resampling weight: existence * mean over covered cells of P(p_i in c) * (1 - exp(-da E[lambda_c])).
/// The mean keeps large footprints from winning on cell count alone.
double resample_weight(double existence, const Eigen::Ref<const Eigen::ArrayXd>& memberships,
                       const Eigen::Ref<const Eigen::ArrayXd>& cell_expected, double area);

/// gamma * exp(-da * sum of E[lambda] over the error region's cells).
double birth_weight(double gamma, const Eigen::Ref<const Eigen::ArrayXd>& region_expected, double area);

struct ResampleTable {
  std::vector<double> weights;        // one per particle
  std::vector<double> birth_weights;  // one per hit region
};

/// Where a born particle may appear: the axis-aligned error region of one hit.
struct BirthSite {
  Vec2 center = Vec2::Zero();
  double side = 0.0;
};

/// Systematic resampling of `config.population_size` slots over particles and birth sites.
/// Copies get velocity noise and may switch kind; births draw a uniform kind, speed and
/// heading and start with one full hit. If every weight is zero all entries are drawn
/// uniformly. `static_field` supplies the static intensity under the newborn's footprint.
std::vector<Particle> resample(std::span<const Particle> population, const ResampleTable& table,
                               std::span<const BirthSite> sites, const MappingConfig& config,
                               double error_area, const LambdaGrid& static_field, Rng& rng);

/// Fresh particle whose footprint contains a uniform point of the birth site.
Particle spawn_particle(const BirthSite& site, const MappingConfig& config, double error_area,
                        const LambdaGrid& static_field, Rng& rng);

}  // namespace dlf
