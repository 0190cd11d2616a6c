#pragma once

#include <array>
#include <optional>
#include <span>

#include "dlf/geometry.hpp"
#include "dlf/particles.hpp"
#include "dlf/types.hpp"

namespace dlf {

inline constexpr double kKappaCap = 500.0;
inline constexpr double kKappaMin = 1.0;

/// I1(kappa) / I0(kappa).
double bessel_ratio(double kappa);

/// Maximum-likelihood concentration for a mean resultant length R in [0, 1], capped at
/// kKappaCap.
double kappa_from_resultant(double resultant);

/// Table-interpolated inverse of the Bessel ratio (relative error below 1e-6), used when
/// fitting every cell of a snapshot.
double kappa_from_resultant_table(double resultant);

/// sqrt(1 / kappa), or nullopt below kKappaMin where the normal approximation is poor.
std::optional<double> von_mises_to_gaussian(double kappa);

/// Weighted running moments of speed and heading.
struct VelocityMoments {
  double weight = 0.0;
  double speed_sum = 0.0;
  double speed_sq_sum = 0.0;
  double cos_sum = 0.0;
  double sin_sum = 0.0;

  void add(const Vec2& velocity, double w) {
    const double s = velocity.norm();
    weight += w;
    speed_sum += w * s;
    speed_sq_sum += w * s * s;
    if (s > 0.0) {
      cos_sum += w * velocity.x() / s;
      sin_sum += w * velocity.y() / s;
    }
  }
  void merge(const VelocityMoments& o) {
    weight += o.weight;
    speed_sum += o.speed_sum;
    speed_sq_sum += o.speed_sq_sum;
    cos_sum += o.cos_sum;
    sin_sum += o.sin_sum;
  }
};

/// Normal speed and Von Mises heading fitted to the moments; nullopt without weight.
/// `exact` selects the Newton inversion over the table.
std::optional<CellVelocityDistribution> fit_distribution(const VelocityMoments& m, bool exact = true);

/// Fit over the dynamic particles of one cell, each weighted by lambda * membership * existence.
std::optional<CellVelocityDistribution> fit_cell_distribution(std::span<const Particle> occupants, double area,
                                                              double tau);

struct ClassIntensities {
  double lambda_static = 0.0;
  std::array<double, kNumDynamicKinds> lambda_by_kind{};
  double total_dynamic() const { return lambda_by_kind[0] + lambda_by_kind[1]; }
};

/// Per-kind sums of lambda * membership * existence for the occupants of one cell.
ClassIntensities aggregate_class_intensities(std::span<const Particle> occupants, double area, double tau);

/// Share of each dynamic kind in a total dynamic intensity; uniform when it is zero.
std::array<double, kNumDynamicKinds> kind_probabilities(const std::array<double, kNumDynamicKinds>& lambda_by_kind);

}  // namespace dlf
