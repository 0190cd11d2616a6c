#pragma once

// Template definitions for lambda_core.hpp.

#include <algorithm>
#include <limits>

namespace dlf {

template <typename Scalar>
LambdaGridT<Scalar>::LambdaGridT(int width, int height, Scalar cell_size, Vector2 origin)
    : width_(width), height_(height), cell_size_(cell_size), origin_(std::move(origin)) {
  if (width <= 0 || height <= 0) throw DomainError("LambdaGrid: dimensions must be positive");
  if (!(cell_size > 0)) throw DomainError("LambdaGrid: cell size must be positive");
  lambda_static_ = Array::Zero(size());
  for (auto& layer : lambda_kind_) layer = Array::Zero(size());
  velocity_.assign(static_cast<std::size_t>(size()), std::nullopt);
}

template <typename Scalar>
std::optional<CellIndex> LambdaGridT<Scalar>::locate(const Vector2& p) const {
  const Scalar fx = (p.x() - origin_.x()) / cell_size_;
  const Scalar fy = (p.y() - origin_.y()) / cell_size_;
  if (!(fx >= 0) || !(fy >= 0) || fx >= width_ || fy >= height_) return std::nullopt;
  return index(static_cast<int>(fx), static_cast<int>(fy));
}

template <typename Scalar>
typename LambdaGridT<Scalar>::Vector2 LambdaGridT<Scalar>::cell_center(CellIndex idx) const {
  return origin_ + Vector2((col(idx) + Scalar(0.5)) * cell_size_, (row(idx) + Scalar(0.5)) * cell_size_);
}

template <typename Scalar>
Box2 LambdaGridT<Scalar>::cell_box(CellIndex idx) const {
  const Vec2 lo(double(origin_.x() + col(idx) * cell_size_), double(origin_.y() + row(idx) * cell_size_));
  return {lo, lo + Vec2::Constant(double(cell_size_))};
}

template <typename Scalar>
Box2 LambdaGridT<Scalar>::bounds() const {
  const Vec2 lo(double(origin_.x()), double(origin_.y()));
  return {lo, lo + Vec2(double(width_ * cell_size_), double(height_ * cell_size_))};
}

namespace detail {
template <typename Scalar>
void check_intensity(Scalar lambda) {
  if (!(lambda >= 0) || !std::isfinite(double(lambda)))
    throw DomainError("LambdaGrid: intensities must be finite and non-negative");
}
}  // namespace detail

template <typename Scalar>
void LambdaGridT<Scalar>::set_static(CellIndex idx, Scalar lambda) {
  detail::check_intensity(lambda);
  lambda_static_[idx] = lambda;
}

template <typename Scalar>
void LambdaGridT<Scalar>::set_kind(CellIndex idx, ObstacleKind kind, Scalar lambda) {
  if (kind == ObstacleKind::StaticCell) {
    set_static(idx, lambda);
    return;
  }
  detail::check_intensity(lambda);
  lambda_kind_[dynamic_slot(kind)][idx] = lambda;
}

template <typename Scalar>
void LambdaGridT<Scalar>::set_velocity(CellIndex idx, const std::optional<CellVelocityDistribution>& dist) {
  velocity_[idx] = dist;
}

template <typename Scalar>
CellStateT<Scalar> LambdaGridT<Scalar>::cell(CellIndex idx) const {
  CellStateT<Scalar> s;
  s.lambda_static = lambda_static_[idx];
  for (std::size_t k = 0; k < kNumDynamicKinds; ++k) s.lambda_by_kind[k] = lambda_kind_[k][idx];
  s.velocity = velocity_[idx];
  return s;
}

template <typename Scalar>
void LambdaGridT<Scalar>::set_cell(CellIndex idx, const CellStateT<Scalar>& state) {
  set_static(idx, state.lambda_static);
  for (std::size_t k = 0; k < kNumDynamicKinds; ++k) {
    detail::check_intensity(state.lambda_by_kind[k]);
    lambda_kind_[k][idx] = state.lambda_by_kind[k];
  }
  if (state.velocity && !(state.total_dynamic() > 0))
    throw DomainError("LambdaGrid: velocity distribution requires dynamic intensity");
  velocity_[idx] = state.velocity;
}

template <typename Scalar>
Scalar LambdaGridT<Scalar>::expected_lambda(CellIndex idx) const {
  Scalar e = lambda_static_[idx];
  for (const auto& layer : lambda_kind_) e += layer[idx];
  return e;
}

template <typename Scalar>
Scalar LambdaGridT<Scalar>::integrated_intensity() const {
  Scalar total = lambda_static_.sum();
  for (const auto& layer : lambda_kind_) total += layer.sum();
  return total * cell_area();
}

template <typename Scalar>
void LambdaGridT<Scalar>::shift(int dx, int dy, Scalar fill) {
  if (dx == 0 && dy == 0) return;
  auto shift_array = [&](auto& data, auto empty) {
    auto copy = data;
    for (int iy = 0; iy < height_; ++iy) {
      for (int ix = 0; ix < width_; ++ix) {
        const int sx = ix + dx, sy = iy + dy;
        data[index(ix, iy)] = contains(sx, sy) ? copy[index(sx, sy)] : empty;
      }
    }
  };
  shift_array(lambda_static_, fill);
  for (auto& layer : lambda_kind_) shift_array(layer, Scalar(0));
  shift_array(velocity_, std::optional<CellVelocityDistribution>{});
  origin_ += Vector2(dx * cell_size_, dy * cell_size_);
}

template <typename Scalar>
LambdaGridT<Scalar> refine_grid(const LambdaGridT<Scalar>& field, int factor) {
  if (factor <= 0) throw DomainError("refine_grid: factor must be positive");
  LambdaGridT<Scalar> out(field.width() * factor, field.height() * factor, field.cell_size() / factor,
                          field.origin());
  for (int iy = 0; iy < out.height(); ++iy) {
    for (int ix = 0; ix < out.width(); ++ix) {
      out.set_cell(out.index(ix, iy), field.cell(field.index(ix / factor, iy / factor)));
    }
  }
  return out;
}

template <typename Visitor>
void for_each_cell_on_segment(const LambdaGrid& grid, const Vec2& a, const Vec2& b, Visitor&& visit) {
  const Vec2 d = b - a;
  const double cs = grid.cell_size();
  const Vec2 origin = grid.origin();

  if (d.squaredNorm() == 0.0) {
    if (auto idx = grid.locate(a)) visit(*idx, 0.0, 1.0);
    return;
  }
  const auto clipped = ray_box_interval(a, d, grid.bounds(), 1.0);
  if (!clipped) return;
  auto [t, t_end] = *clipped;

  // Start cell: sample slightly inside the clipped segment so boundary starts resolve
  // towards the direction of travel.
  const double t_probe = std::min(t_end, t + 1e-9 * std::max(1.0, t_end - t));
  const Vec2 p = a + t_probe * d;
  int ix = std::clamp(static_cast<int>(std::floor((p.x() - origin.x()) / cs)), 0, grid.width() - 1);
  int iy = std::clamp(static_cast<int>(std::floor((p.y() - origin.y()) / cs)), 0, grid.height() - 1);

  const int step_x = d.x() > 0 ? 1 : (d.x() < 0 ? -1 : 0);
  const int step_y = d.y() > 0 ? 1 : (d.y() < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto boundary_t = [&](int i, int step, int axis) {
    if (step == 0) return inf;
    const double edge = origin[axis] + (step > 0 ? i + 1 : i) * cs;
    return (edge - a[axis]) / d[axis];
  };
  double t_max_x = boundary_t(ix, step_x, 0);
  double t_max_y = boundary_t(iy, step_y, 1);
  const double t_delta_x = step_x != 0 ? cs / std::abs(d.x()) : inf;
  const double t_delta_y = step_y != 0 ? cs / std::abs(d.y()) : inf;

  while (true) {
    const double t_next = std::min({t_max_x, t_max_y, t_end});
    if (t_next > t) visit(grid.index(ix, iy), t, t_next);
    if (t_next >= t_end) break;
    if (t_max_x < t_max_y) {
      ix += step_x;
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x) {
      iy += step_y;
      t_max_y += t_delta_y;
    } else {
      ix += step_x;
      iy += step_y;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    }
    t = t_next;
    if (!grid.contains(ix, iy)) break;
  }
}

}  // namespace dlf
