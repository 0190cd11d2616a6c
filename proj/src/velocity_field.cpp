#include "dlf/velocity_field.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace dlf {

double bessel_ratio(double kappa) {
  if (!(kappa >= 0.0)) throw DomainError("bessel_ratio: kappa must be >= 0");
  if (kappa == 0.0) return 0.0;
  if (kappa > 600.0) {
    // Asymptotic expansion; the Bessel functions overflow past this range.
    const double k = kappa;
    return 1.0 - 0.5 / k - 0.125 / (k * k) - 0.125 / (k * k * k);
  }
  return std::cyl_bessel_i(1.0, kappa) / std::cyl_bessel_i(0.0, kappa);
}

double kappa_from_resultant(double r) {
  if (!(r >= 0.0) || r > 1.0 + 1e-12) throw DomainError("kappa_from_resultant: R must lie in [0, 1]");
  if (r <= 0.0) return 0.0;
  if (r >= bessel_ratio(kKappaCap)) return kKappaCap;
  // Banerjee et al. starting point, then Newton on A(kappa) = R. A'(k) = 1 - A/k - A^2.
  double k = r * (2.0 - r * r) / (1.0 - r * r);
  k = std::clamp(k, 1e-8, kKappaCap);
  for (int it = 0; it < 50; ++it) {
    const double a = bessel_ratio(k);
    const double da = 1.0 - a / k - a * a;
    if (!(da > 0.0)) break;
    const double next = std::clamp(k - (a - r) / da, 0.5 * k, 2.0 * k);
    if (std::abs(next - k) <= 1e-12 * k) {
      k = next;
      break;
    }
    k = next;
  }
  return std::min(k, kKappaCap);
}

namespace {

// Bessel ratio sampled uniformly in log(kappa).
struct KappaTable {
  static constexpr int kNodes = 16384;
  static constexpr double kLogMin = -9.210340371976182;  // log(1e-4)
  double log_max = std::log(kKappaCap);
  std::vector<double> ratio;

  KappaTable() {
    ratio.resize(kNodes);
    for (int i = 0; i < kNodes; ++i) ratio[static_cast<std::size_t>(i)] = bessel_ratio(std::exp(log_kappa(i)));
  }
  double log_kappa(int i) const { return kLogMin + (log_max - kLogMin) * i / (kNodes - 1); }

  double invert(double r) const {
    if (r <= ratio.front()) return 2.0 * r;  // A(k) ~ k / 2 for small k
    if (r >= ratio.back()) return kKappaCap;
    const auto it = std::upper_bound(ratio.begin(), ratio.end(), r);
    const int hi = static_cast<int>(it - ratio.begin());
    const int lo = hi - 1;
    const double f = (r - ratio[static_cast<std::size_t>(lo)]) /
                     (ratio[static_cast<std::size_t>(hi)] - ratio[static_cast<std::size_t>(lo)]);
    return std::exp(log_kappa(lo) + f * (log_kappa(hi) - log_kappa(lo)));
  }
};

}  // namespace

double kappa_from_resultant_table(double r) {
  if (!(r >= 0.0) || r > 1.0 + 1e-12) throw DomainError("kappa_from_resultant: R must lie in [0, 1]");
  static const KappaTable table;
  return table.invert(r);
}

std::optional<double> von_mises_to_gaussian(double kappa) {
  if (!(kappa >= kKappaMin)) return std::nullopt;
  return std::sqrt(1.0 / kappa);
}

std::optional<CellVelocityDistribution> fit_distribution(const VelocityMoments& m, bool exact) {
  if (!(m.weight > 0.0)) return std::nullopt;
  CellVelocityDistribution d;
  d.mu_v = m.speed_sum / m.weight;
  d.sigma_v = std::sqrt(std::max(0.0, m.speed_sq_sum / m.weight - d.mu_v * d.mu_v));
  const double c = m.cos_sum / m.weight;
  const double s = m.sin_sum / m.weight;
  d.mu_theta = wrap_angle(std::atan2(s, c));
  const double r = std::min(1.0, std::hypot(c, s));
  d.kappa_theta = exact ? kappa_from_resultant(r) : kappa_from_resultant_table(r);
  return d;
}

namespace {

struct OccupantWeights {
  Eigen::ArrayXd lambdas, existences, memberships;
};

OccupantWeights weigh(std::span<const Particle> occupants, double area, double tau) {
  OccupantWeights w;
  const auto n = static_cast<Eigen::Index>(occupants.size());
  w.lambdas.resize(n);
  w.existences.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Particle& p = occupants[static_cast<std::size_t>(i)];
    w.lambdas[i] = p.intensity;
    w.existences[i] = p.kind == ObstacleKind::StaticCell ? 1.0 : existence_probability(p, tau);
  }
  w.memberships = membership_probabilities(w.lambdas, area);
  return w;
}

}  // namespace

std::optional<CellVelocityDistribution> fit_cell_distribution(std::span<const Particle> occupants, double area,
                                                              double tau) {
  if (occupants.empty()) return std::nullopt;
  const OccupantWeights w = weigh(occupants, area, tau);
  VelocityMoments m;
  for (std::size_t i = 0; i < occupants.size(); ++i) {
    if (occupants[i].kind == ObstacleKind::StaticCell) continue;
    const auto j = static_cast<Eigen::Index>(i);
    const double wt = w.lambdas[j] * w.memberships[j] * w.existences[j];
    if (wt > 0.0) m.add(occupants[i].velocity, wt);
  }
  return fit_distribution(m);
}

ClassIntensities aggregate_class_intensities(std::span<const Particle> occupants, double area, double tau) {
  ClassIntensities out;
  if (occupants.empty()) return out;
  const OccupantWeights w = weigh(occupants, area, tau);
  for (std::size_t i = 0; i < occupants.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    const double v = w.lambdas[j] * w.memberships[j] * w.existences[j];
    if (occupants[i].kind == ObstacleKind::StaticCell)
      out.lambda_static += v;
    else
      out.lambda_by_kind[dynamic_slot(occupants[i].kind)] += v;
  }
  return out;
}

std::array<double, kNumDynamicKinds> kind_probabilities(const std::array<double, kNumDynamicKinds>& l) {
  const double total = l[0] + l[1];
  if (!(total > 0.0)) return {0.5, 0.5};
  return {l[0] / total, l[1] / total};
}

}  // namespace dlf
