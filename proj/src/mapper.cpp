#include "dlf/mapper.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>

namespace dlf {

namespace {

// Hit occupants below this fraction of the cell's best membership are not renewed.
constexpr double kRenewRatio = 0.01;

template <typename T>
void shift_layer(std::vector<T>& data, int w, int h, int dx, int dy, const T& fill) {
  std::vector<T> copy = data;
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      const int sx = ix + dx, sy = iy + dy;
      const bool inside = sx >= 0 && sy >= 0 && sx < w && sy < h;
      data[static_cast<std::size_t>(iy) * w + ix] = inside ? copy[static_cast<std::size_t>(sy) * w + sx] : fill;
    }
  }
}

Vec2 grid_origin_for(const Vec2& center, int width, int height, double cs) {
  // Snap to whole cells so that scrolling never resamples cell contents.
  const Vec2 raw = center - 0.5 * cs * Vec2(width, height);
  return {std::floor(raw.x() / cs) * cs, std::floor(raw.y() / cs) * cs};
}

}  // namespace

DynamicLambdaField::DynamicLambdaField(int width, int height, double cell_size, const MappingConfig& config,
                                       double error_area, const Vec2& center)
    : config_(config),
      error_area_(error_area),
      static_field_(width, height, cell_size, grid_origin_for(center, width, height, cell_size)),
      exposure_field_(static_field_),
      snapshot_(static_field_),
      footprints_(&FootprintTable::shared(cell_size)) {
  config_.validate();
  if (!(error_area > 0.0)) throw DomainError("mapper: error area must be > 0");
  const auto n = static_cast<std::size_t>(static_field_.size());
  static_hit_.assign(n, 0.0);
  persistent_hit_.assign(n, 0.0);
  static_miss_.assign(n, 0.0);
  cell_moments_.assign(n, {});
  for (CellIndex c = 0; c < static_field_.size(); ++c) {
    static_field_.set_static(c, config_.lambda_prior);
    exposure_field_.set_static(c, config_.lambda_prior);
    snapshot_.set_static(c, config_.lambda_prior);
  }
  cell_begin_.assign(n + 1, 0);
}

double DynamicLambdaField::static_lambda(CellIndex c) const {
  const auto i = static_cast<std::size_t>(c);
  if (static_hit_[i] == 0.0 && static_miss_[i] == 0.0) return config_.lambda_prior;
  return estimate_intensity(static_hit_[i], static_miss_[i], error_area_, config_.lambda_max);
}

double DynamicLambdaField::exposure_lambda(CellIndex c) const {
  const auto i = static_cast<std::size_t>(c);
  if (persistent_hit_[i] == 0.0 && static_miss_[i] == 0.0) return config_.lambda_prior;
  return estimate_intensity(persistent_hit_[i], static_miss_[i], error_area_, config_.lambda_max);
}

void DynamicLambdaField::recenter(const Vec2& p) {
  const double cs = static_field_.cell_size();
  const Vec2 target = grid_origin_for(p, static_field_.width(), static_field_.height(), cs);
  const Vec2 delta = (target - static_field_.origin()) / cs;
  const int dx = static_cast<int>(std::lround(delta.x()));
  const int dy = static_cast<int>(std::lround(delta.y()));
  if (dx == 0 && dy == 0) return;
  const int w = static_field_.width(), h = static_field_.height();
  static_field_.shift(dx, dy, config_.lambda_prior);
  exposure_field_.shift(dx, dy, config_.lambda_prior);
  snapshot_.shift(dx, dy, config_.lambda_prior);
  shift_layer(static_hit_, w, h, dx, dy, 0.0);
  shift_layer(persistent_hit_, w, h, dx, dy, 0.0);
  shift_layer(static_miss_, w, h, dx, dy, 0.0);
  // Occupancy and weights refer to the old cell indices.
  pair_particle_.clear();
  pair_weight_.clear();
  occupied_cells_.clear();
  std::fill(cell_begin_.begin(), cell_begin_.end(), 0u);
  table_ = {};
  sites_.clear();
}

void DynamicLambdaField::evolve(Rng& rng) {
  for (auto& p : particles_) p = dlf::evolve(p, config_.dt, exposure_field_, rng);
}

void DynamicLambdaField::set_particles(std::vector<Particle> particles) {
  particles_ = std::move(particles);
  table_ = {};
  sites_.clear();
}

void DynamicLambdaField::build_occupancy() {
  const LambdaGrid& g = static_field_;
  const double cs = g.cell_size();
  const auto ncell = static_cast<std::size_t>(g.size());
  std::fill(cell_begin_.begin(), cell_begin_.end(), 0u);

  struct Placement {
    int ix, iy;
    std::span<const CellOffset> offsets;
  };
  std::vector<Placement> place(particles_.size(), {0, 0, {}});
  for (std::size_t i = 0; i < particles_.size(); ++i) {
    const Particle& p = particles_[i];
    const Vec2 f = (p.position - g.origin()) / cs;
    if (!(f.x() >= 0.0) || !(f.y() >= 0.0) || f.x() >= g.width() || f.y() >= g.height()) continue;
    const int ix = static_cast<int>(f.x()), iy = static_cast<int>(f.y());
    place[i] = {ix, iy, footprints_->lookup(p.kind, f.x() - ix, f.y() - iy, p.heading())};
    for (const auto& o : place[i].offsets) {
      const int cx = ix + o.dx, cy = iy + o.dy;
      if (g.contains(cx, cy)) ++cell_begin_[static_cast<std::size_t>(g.index(cx, cy)) + 1];
    }
  }
  for (std::size_t c = 0; c < ncell; ++c) cell_begin_[c + 1] += cell_begin_[c];
  pair_particle_.resize(cell_begin_[ncell]);
  std::vector<std::uint32_t> fill(cell_begin_.begin(), cell_begin_.end() - 1);
  for (std::size_t i = 0; i < particles_.size(); ++i) {
    for (const auto& o : place[i].offsets) {
      const int cx = place[i].ix + o.dx, cy = place[i].iy + o.dy;
      if (g.contains(cx, cy)) pair_particle_[fill[static_cast<std::size_t>(g.index(cx, cy))]++] = static_cast<std::uint32_t>(i);
    }
  }
  occupied_cells_.clear();
  for (std::size_t c = 0; c < ncell; ++c)
    if (cell_begin_[c + 1] > cell_begin_[c]) occupied_cells_.push_back(static_cast<CellIndex>(c));
}

void DynamicLambdaField::memberships(CellIndex c, double lambda_s, std::vector<double>& out) const {
  const double area = static_field_.cell_area();
  const auto b = cell_begin_[static_cast<std::size_t>(c)], e = cell_begin_[static_cast<std::size_t>(c) + 1];
  const std::size_t n = 1 + (e - b);
  out.resize(n);
  double xm = lambda_s * area;
  for (auto k = b; k < e; ++k) xm = std::max(xm, particles_[pair_particle_[k]].intensity * area);
  if (!(xm > 0.0)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(n));
    return;
  }
  // (e^x - 1) / (e^xm - 1), evaluated without overflow.
  const double denom = -std::expm1(-xm);
  auto weight = [&](double x) { return std::exp(x - xm) * (-std::expm1(-x)) / denom; };
  double total = out[0] = weight(lambda_s * area);
  for (auto k = b; k < e; ++k) total += out[1 + (k - b)] = weight(particles_[pair_particle_[k]].intensity * area);
  for (double& v : out) v /= total;
}

void DynamicLambdaField::update(const ScanClassification& scan) {
  const LambdaGrid& g = static_field_;
  const double area = g.cell_area();
  const auto ncell = static_cast<std::size_t>(g.size());

  build_occupancy();
  last_pairs_ = pair_particle_.size();
  existence_.resize(particles_.size());
  for (std::size_t i = 0; i < particles_.size(); ++i) existence_[i] = existence_probability(particles_[i], config_.tau);

  // Per-cell measurement totals.
  std::vector<double> hit_weight(ncell, 0.0);
  std::vector<CellIndex> measured;
  measured.reserve(scan.misses.size());
  for (const auto& region : scan.hits)
    for (const auto& wc : region.cells) {
      if (hit_weight[static_cast<std::size_t>(wc.cell)] == 0.0) measured.push_back(wc.cell);
      hit_weight[static_cast<std::size_t>(wc.cell)] += wc.weight;
    }
  std::vector<double> miss_count(ncell, 0.0);
  for (const auto& m : scan.misses) {
    if (hit_weight[static_cast<std::size_t>(m.cell)] == 0.0) measured.push_back(m.cell);
    miss_count[static_cast<std::size_t>(m.cell)] += m.count;
  }
  std::sort(measured.begin(), measured.end());

  // Prior expected intensity of measured cells and accumulation with pre-update lambdas.
  std::vector<double> prior_expected(ncell, 0.0);
  std::vector<double> mem;
  std::vector<double> static_before(measured.size());
  for (std::size_t k = 0; k < measured.size(); ++k) static_before[k] = static_lambda(measured[k]);

  for (std::size_t k = 0; k < measured.size(); ++k) {
    const CellIndex c = measured[k];
    const auto ci = static_cast<std::size_t>(c);
    const auto b = cell_begin_[ci], e = cell_begin_[ci + 1];
    const double ls = static_before[k];

    memberships(c, ls, mem);
    double expected = ls * mem[0];
    for (auto j = b; j < e; ++j) expected += particles_[pair_particle_[j]].intensity * mem[1 + (j - b)] * existence_[pair_particle_[j]];
    prior_expected[ci] = expected;

    if (miss_count[ci] > 0.0) {
      const double m = miss_count[ci];
      static_miss_[ci] += m * mem[0];
      for (auto j = b; j < e; ++j) {
        const auto i = pair_particle_[j];
        particles_[i].miss_sum += m * mem[1 + (j - b)] * existence_[i];
      }
    }
    if (hit_weight[ci] > 0.0) {
      // Without the override the static particle keeps only its own share.
      memberships(c, exposure_field_.static_layer()[c], mem);
      persistent_hit_[ci] += hit_weight[ci] * mem[0];
      memberships(c, ls, mem);
      // The static particle shares the error region at the largest co-located intensity.
      double override_lambda = ls;
      for (auto j = b; j < e; ++j) override_lambda = std::max(override_lambda, particles_[pair_particle_[j]].intensity);
      if (override_lambda != ls) memberships(c, override_lambda, mem);
      const double h = hit_weight[ci];
      static_hit_[ci] += h * mem[0];
      const double top = *std::max_element(mem.begin(), mem.end());
      for (auto j = b; j < e; ++j) {
        const auto i = pair_particle_[j];
        const double m = mem[1 + (j - b)];
        particles_[i] = accumulate_measurement(particles_[i], MeasurementEvent::Hit, h * m, existence_[i],
                                               m >= kRenewRatio * top);
      }
    }
  }

  // New intensities.
  for (auto& p : particles_) p.intensity = estimate_intensity(p.hit_sum, p.miss_sum, error_area_, config_.lambda_max);
  for (CellIndex c : measured) {
    static_field_.set_static(c, static_lambda(c));
    exposure_field_.set_static(c, exposure_lambda(c));
  }
  for (std::size_t i = 0; i < particles_.size(); ++i) existence_[i] = existence_probability(particles_[i], config_.tau);

  // Posterior field, resampling weights and snapshot.
  table_.weights.assign(particles_.size(), 0.0);
  std::vector<std::uint32_t> covered(particles_.size(), 0);
  pair_weight_.assign(pair_particle_.size(), 0.0);
  for (CellIndex c = 0; c < g.size(); ++c) {
    const auto ci = static_cast<std::size_t>(c);
    snapshot_.set_static(c, static_field_.static_layer()[c]);
    for (ObstacleKind kind : kDynamicKinds) snapshot_.set_kind(c, kind, 0.0);
    snapshot_.set_velocity(c, std::nullopt);
    cell_moments_[ci] = {};
  }
  for (CellIndex c : occupied_cells_) {
    const auto ci = static_cast<std::size_t>(c);
    const auto b = cell_begin_[ci], e = cell_begin_[ci + 1];
    const double ls = static_field_.static_layer()[c];
    memberships(c, ls, mem);
    std::array<double, kNumDynamicKinds> by_kind{};
    double expected = ls * mem[0];
    VelocityMoments moments;
    for (auto j = b; j < e; ++j) {
      const auto i = pair_particle_[j];
      const double w = particles_[i].intensity * mem[1 + (j - b)] * existence_[i];
      pair_weight_[j] = w;
      by_kind[dynamic_slot(particles_[i].kind)] += w;
      expected += w;
      if (w > 0.0) moments.add(particles_[i].velocity, w);
    }
    const double collide = -std::expm1(-area * expected);
    for (auto j = b; j < e; ++j) {
      const auto i = pair_particle_[j];
      table_.weights[i] += existence_[i] * mem[1 + (j - b)] * collide;
      ++covered[i];
    }
    snapshot_.set_static(c, ls * mem[0]);
    for (ObstacleKind kind : kDynamicKinds) snapshot_.set_kind(c, kind, by_kind[dynamic_slot(kind)]);
    if (by_kind[0] + by_kind[1] > 0.0) snapshot_.set_velocity(c, fit_distribution(moments, false));
    cell_moments_[ci] = moments;
  }

  // Mean over the footprint, so large kinds are not favoured by cell count alone.
  for (std::size_t i = 0; i < particles_.size(); ++i)
    if (covered[i] > 0) table_.weights[i] /= covered[i];

  // Births, weighed against the prior field.
  sites_.clear();
  table_.birth_weights.clear();
  for (const auto& region : scan.hits) {
    double sum = 0.0;
    for (const auto& wc : region.cells) sum += prior_expected[static_cast<std::size_t>(wc.cell)];
    sites_.push_back({region.center, region.side});
    table_.birth_weights.push_back(config_.gamma * std::exp(-area * sum));
  }
}

void DynamicLambdaField::resample(Rng& rng) {
  if (table_.weights.size() != particles_.size()) {
    // No update since the last change of population; keep it.
    return;
  }
  if (particles_.empty() && sites_.empty()) return;
  particles_ = dlf::resample(particles_, table_, sites_, config_, error_area_, exposure_field_, rng);
  table_ = {};
  sites_.clear();
  // Occupancy indices referred to the previous population.
  pair_particle_.clear();
  pair_weight_.clear();
  occupied_cells_.clear();
}

RegionEstimate DynamicLambdaField::estimate_region(const Polygon& convex, double margin) const {
  RegionEstimate out;
  const Box2 bb = bounding_box(convex);
  const LambdaGrid& g = snapshot_;
  const double cs = g.cell_size();
  const int x0 = std::max(0, static_cast<int>(std::floor((bb.min.x() - margin - g.origin().x()) / cs)));
  const int y0 = std::max(0, static_cast<int>(std::floor((bb.min.y() - margin - g.origin().y()) / cs)));
  const int x1 = std::min(g.width() - 1, static_cast<int>(std::floor((bb.max.x() + margin - g.origin().x()) / cs)));
  const int y1 = std::min(g.height() - 1, static_cast<int>(std::floor((bb.max.y() + margin - g.origin().y()) / cs)));
  VelocityMoments moments;
  for (int iy = y0; iy <= y1; ++iy) {
    for (int ix = x0; ix <= x1; ++ix) {
      const CellIndex c = g.index(ix, iy);
      if (point_polygon_distance(g.cell_center(c), convex) > margin) continue;
      ++out.cells;
      for (ObstacleKind kind : kDynamicKinds) out.mass[dynamic_slot(kind)] += g.cell_area() * g.kind_layer(kind)[c];
      moments.merge(cell_moments_[static_cast<std::size_t>(c)]);
    }
  }
  out.kind_probability = kind_probabilities(out.mass);
  out.velocity = fit_distribution(moments);
  return out;
}

void DynamicLambdaField::write_particles(std::ostream& os) const {
  os << "kind,x,y,vx,vy,lambda,hits,misses,existence\n";
  const auto old = os.precision(10);
  for (const auto& p : particles_) {
    os << to_string(p.kind) << ',' << p.position.x() << ',' << p.position.y() << ',' << p.velocity.x() << ','
       << p.velocity.y() << ',' << p.intensity << ',' << p.hit_sum << ',' << p.miss_sum << ','
       << existence_probability(p, config_.tau) << '\n';
  }
  os.precision(old);
}

void DynamicLambdaField::write_polar(std::ostream& os) const {
  constexpr int kBins = 36;
  os << "ix,iy,lambda_pedestrian,lambda_car";
  for (int b = 0; b < kBins; ++b) os << ",b" << b;
  os << '\n';
  if (pair_weight_.size() != pair_particle_.size()) return;
  const auto old = os.precision(8);
  for (CellIndex c : occupied_cells_) {
    const auto ci = static_cast<std::size_t>(c);
    std::array<double, kBins> hist{};
    double total = 0.0;
    for (auto j = cell_begin_[ci]; j < cell_begin_[ci + 1]; ++j) {
      const Particle& p = particles_[pair_particle_[j]];
      const double w = pair_weight_[j];
      if (!(w > 0.0)) continue;
      const double u = (p.heading() + std::numbers::pi) / (2.0 * std::numbers::pi);
      hist[static_cast<std::size_t>(std::clamp(static_cast<int>(u * kBins), 0, kBins - 1))] += w;
      total += w;
    }
    if (!(total > 0.0)) continue;
    os << snapshot_.col(c) << ',' << snapshot_.row(c) << ',' << snapshot_.kind_layer(ObstacleKind::Pedestrian)[c] << ','
       << snapshot_.kind_layer(ObstacleKind::Car)[c];
    for (double h : hist) os << ',' << h / total;
    os << '\n';
  }
  os.precision(old);
}

}  // namespace dlf
