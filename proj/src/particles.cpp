#include "dlf/particles.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dlf/footprint.hpp"

namespace dlf {

void MappingConfig::validate() const {
  if (!(tau >= 0.0)) throw DomainError("mapping: tau must be >= 0");
  if (!(gamma >= 0.0)) throw DomainError("mapping: gamma must be >= 0");
  if (!(dt > 0.0)) throw DomainError("mapping: dt must be > 0");
  if (!(resample_velocity_noise >= 0.0)) throw DomainError("mapping: velocity noise must be >= 0");
  if (!(kind_switch_probability >= 0.0 && kind_switch_probability < 1.0))
    throw DomainError("mapping: kind switch probability must lie in [0, 1)");
  if (!(lambda_max > 0.0)) throw DomainError("mapping: lambda_max must be > 0");
  if (!(lambda_prior >= 0.0 && lambda_prior <= lambda_max))
    throw DomainError("mapping: lambda_prior must lie in [0, lambda_max]");
}

namespace {

void clamp_speed(Particle& p) {
  const double vmax = default_profile(p.kind).max_speed;
  const double speed = p.velocity.norm();
  if (speed > vmax) p.velocity *= vmax / speed;
}

void footprint_cells(ObstacleKind kind, const Vec2& center, double heading, const LambdaGrid& grid,
                     std::vector<CellIndex>& out) {
  const Vec2 f = (center - grid.origin()) / grid.cell_size();
  const int ix = static_cast<int>(std::floor(f.x())), iy = static_cast<int>(std::floor(f.y()));
  for (const CellOffset& o : FootprintTable::shared(grid.cell_size()).lookup(kind, f.x() - ix, f.y() - iy, heading))
    if (grid.contains(ix + o.dx, iy + o.dy)) out.push_back(grid.index(ix + o.dx, iy + o.dy));
}

}  // namespace

Particle evolve(Particle p, double dt, const Vec2& accel, const LambdaGrid& static_field) {
  if (!(dt > 0.0)) throw DomainError("evolve: dt must be > 0");
  p.last_hit_age += dt;
  if (p.kind == ObstacleKind::StaticCell) return p;

  const Vec2 start = p.position;
  const double start_heading = p.heading();
  p.position += p.velocity * dt;
  p.velocity += accel * dt;
  clamp_speed(p);

  // Cells newly covered: the footprint at the new pose plus the cells crossed by the
  // centre, minus the footprint at the old pose.
  thread_local std::vector<CellIndex> before, after;
  before.clear();
  after.clear();
  footprint_cells(p.kind, start, start_heading, static_field, before);
  footprint_cells(p.kind, p.position, p.heading(), static_field, after);
  for_each_cell_on_segment(static_field, start, p.position, [&](CellIndex c, double, double) { after.push_back(c); });
  std::sort(before.begin(), before.end());
  std::sort(after.begin(), after.end());
  after.erase(std::unique(after.begin(), after.end()), after.end());
  const double area = static_field.cell_area();
  for (CellIndex c : after)
    if (!std::binary_search(before.begin(), before.end(), c)) p.static_exposure += area * static_field.static_layer()[c];
  return p;
}

Particle evolve(Particle p, double dt, const LambdaGrid& static_field, Rng& rng) {
  const double sigma = default_profile(p.kind).accel_sigma;
  Vec2 accel = Vec2::Zero();
  if (p.kind != ObstacleKind::StaticCell && sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    accel.x() = n(rng);
    accel.y() = n(rng);
  }
  return evolve(p, dt, accel, static_field);
}

Eigen::ArrayXd membership_probabilities(const Eigen::Ref<const Eigen::ArrayXd>& lambdas, double area) {
  const Eigen::Index n = lambdas.size();
  if (n == 0) return {};
  if (!(area >= 0.0) || !(lambdas.minCoeff() >= 0.0)) throw DomainError("membership: negative input");
  const Eigen::ArrayXd x = lambdas * area;
  const double xm = x.maxCoeff();
  if (!(xm > 0.0)) return Eigen::ArrayXd::Constant(n, 1.0 / static_cast<double>(n));
  // (e^x - 1) / (e^xm - 1) without overflow.
  const double denom = -std::expm1(-xm);
  Eigen::ArrayXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w[i] = std::exp(x[i] - xm) * (-std::expm1(-x[i])) / denom;
  return w / w.sum();
}

double existence_probability(const Particle& p, double tau) {
  return std::exp(-p.static_exposure) * std::exp(-tau * p.last_hit_age);
}

Particle accumulate_measurement(Particle p, MeasurementEvent event, double membership, double existence,
                                bool renews) {
  const double inc = membership * existence;
  if (event == MeasurementEvent::Miss) {
    p.miss_sum += inc;
  } else if (inc > 0.0) {
    p.hit_sum += inc;
    if (renews) p.last_hit_age = 0.0;
  }
  return p;
}

double estimate_intensity(double hit_sum, double miss_sum, double error_area, double lambda_max) {
  if (!(error_area > 0.0)) throw DomainError("estimate_intensity: error area must be > 0");
  if (!(hit_sum > 0.0)) return 0.0;
  if (!(miss_sum > 0.0)) return lambda_max;
  return std::clamp(std::log1p(hit_sum / miss_sum) / error_area, 0.0, lambda_max);
}

double expected_cell_lambda(const Eigen::Ref<const Eigen::ArrayXd>& lambdas,
                            const Eigen::Ref<const Eigen::ArrayXd>& existences, double area) {
  if (lambdas.size() == 0) return 0.0;
  return (lambdas * membership_probabilities(lambdas, area) * existences).sum();
}

double expected_cell_lambda(std::span<const Particle> occupants, double area, double tau) {
  const bool has_static = std::any_of(occupants.begin(), occupants.end(),
                                      [](const Particle& p) { return p.kind == ObstacleKind::StaticCell; });
  if (!has_static) throw DomainError("expected_cell_lambda: cell has no static particle");
  Eigen::ArrayXd lambdas(static_cast<Eigen::Index>(occupants.size()));
  Eigen::ArrayXd existences(lambdas.size());
  for (std::size_t i = 0; i < occupants.size(); ++i) {
    const auto& p = occupants[i];
    lambdas[static_cast<Eigen::Index>(i)] = p.intensity;
    existences[static_cast<Eigen::Index>(i)] =
        p.kind == ObstacleKind::StaticCell ? 1.0 : existence_probability(p, tau);
  }
  return expected_cell_lambda(lambdas, existences, area);
}

double resample_weight(double existence, const Eigen::Ref<const Eigen::ArrayXd>& memberships,
                       const Eigen::Ref<const Eigen::ArrayXd>& cell_expected, double area) {
  if (memberships.size() == 0) return 0.0;
  return existence * (memberships * (-(-area * cell_expected).expm1())).mean();
}

double birth_weight(double gamma, const Eigen::Ref<const Eigen::ArrayXd>& region_expected, double area) {
  return gamma * std::exp(-area * region_expected.sum());
}

Particle spawn_particle(const BirthSite& site, const MappingConfig& config, double error_area,
                        const LambdaGrid& static_field, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Particle p;
  p.position = site.center + site.side * Vec2(unit(rng) - 0.5, unit(rng) - 0.5);
  p.kind = kDynamicKinds[std::min<std::size_t>(static_cast<std::size_t>(unit(rng) * kNumDynamicKinds),
                                               kNumDynamicKinds - 1)];
  const double speed = unit(rng) * default_profile(p.kind).max_speed;
  const double heading = (2.0 * unit(rng) - 1.0) * std::numbers::pi;
  p.velocity = speed * heading_vector(heading);
  // The hit lands at a uniform point of the new footprint rather than at its centre.
  const KindProfile& prof = default_profile(p.kind);
  Vec2 u = Vec2::Zero();
  if (prof.shape == FootprintShape::Circle) {
    const double r = 0.5 * prof.length * std::sqrt(unit(rng));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    u = r * heading_vector(a);
  } else if (prof.shape == FootprintShape::Rectangle) {
    const Vec2 local(prof.length * (unit(rng) - 0.5), prof.width * (unit(rng) - 0.5));
    u = Eigen::Rotation2Dd(p.heading()) * local;
  }
  p.position -= u;
  p.hit_sum = 1.0;
  p.miss_sum = 0.0;
  p.intensity = estimate_intensity(p.hit_sum, p.miss_sum, error_area, config.lambda_max);
  // A particle born over static matter starts with the exposure of its footprint.
  thread_local std::vector<CellIndex> cells;
  cells.clear();
  footprint_cells(p.kind, p.position, p.heading(), static_field, cells);
  for (CellIndex c : cells) p.static_exposure += static_field.cell_area() * static_field.static_layer()[c];
  return p;
}

std::vector<Particle> resample(std::span<const Particle> population, const ResampleTable& table,
                               std::span<const BirthSite> sites, const MappingConfig& config,
                               double error_area, const LambdaGrid& static_field, Rng& rng) {
  if (population.empty() && sites.empty()) throw DomainError("resample: nothing to draw from");
  if (table.weights.size() != population.size() || table.birth_weights.size() != sites.size())
    throw DomainError("resample: table does not match population");

  const std::size_t n = population.size();
  const std::size_t slots = config.population_size;
  const std::size_t entries = n + sites.size();
  std::vector<double> cumulative(entries);
  double total = 0.0;
  for (std::size_t i = 0; i < entries; ++i) {
    const double w = i < n ? table.weights[i] : table.birth_weights[i - n];
    if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("resample: invalid weight");
    total += w;
    cumulative[i] = total;
  }
  const bool degenerate = !(total > 0.0);
  if (degenerate) {
    for (std::size_t i = 0; i < entries; ++i) cumulative[i] = static_cast<double>(i + 1);
    total = static_cast<double>(entries);
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Particle> out;
  if (slots == 0) return out;
  const double step = total / static_cast<double>(slots);
  double u = unit(rng) * step;
  std::size_t j = 0;

  out.reserve(slots);
  for (std::size_t slot = 0; slot < slots; ++slot, u += step) {
    while (j + 1 < entries && cumulative[j] <= u) ++j;
    if (j >= n) {
      out.push_back(spawn_particle(sites[j - n], config, error_area, static_field, rng));
      continue;
    }
    Particle p = population[j];
    if (p.kind != ObstacleKind::StaticCell) {
      if (config.resample_velocity_noise > 0.0) {
        p.velocity.x() += config.resample_velocity_noise * noise(rng);
        p.velocity.y() += config.resample_velocity_noise * noise(rng);
      }
      if (config.kind_switch_probability > 0.0 && unit(rng) < config.kind_switch_probability)
        p.kind = p.kind == ObstacleKind::Pedestrian ? ObstacleKind::Car : ObstacleKind::Pedestrian;
      clamp_speed(p);
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace dlf
