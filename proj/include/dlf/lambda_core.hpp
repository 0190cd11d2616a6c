#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "dlf/geometry.hpp"
#include "dlf/types.hpp"

namespace dlf {

/// Intensity ceiling (1/m^2). At 15 cm cells 1 - exp(-da * 1e3) is 1 to double precision.
inline constexpr double kLambdaMax = 1e3;

using CellIndex = std::ptrdiff_t;

template <typename Scalar>
struct CellStateT {
  Scalar lambda_static = 0;
  std::array<Scalar, kNumDynamicKinds> lambda_by_kind{};
  std::optional<CellVelocityDistribution> velocity;

  Scalar total_dynamic() const {
    Scalar s = 0;
    for (Scalar l : lambda_by_kind) s += l;
    return s;
  }
  Scalar expected_lambda() const { return lambda_static + total_dynamic(); }
};

/// Row-major grid of Poisson intensities. Each layer is a dense Eigen array indexed by
/// `iy * width + ix`; cell (0, 0) has its lower-left corner at `origin`.
template <typename Scalar>
class LambdaGridT {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Vector2 = Eigen::Matrix<Scalar, 2, 1>;

  LambdaGridT(int width, int height, Scalar cell_size, Vector2 origin = Vector2::Zero());

  int width() const { return width_; }
  int height() const { return height_; }
  CellIndex size() const { return static_cast<CellIndex>(width_) * height_; }
  Scalar cell_size() const { return cell_size_; }
  Scalar cell_area() const { return cell_size_ * cell_size_; }
  const Vector2& origin() const { return origin_; }

  bool contains(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < width_ && iy < height_; }
  bool contains(CellIndex idx) const { return idx >= 0 && idx < size(); }
  CellIndex index(int ix, int iy) const { return static_cast<CellIndex>(iy) * width_ + ix; }
  int col(CellIndex idx) const { return static_cast<int>(idx % width_); }
  int row(CellIndex idx) const { return static_cast<int>(idx / width_); }

  /// Cell containing a world point, or nullopt outside the grid.
  std::optional<CellIndex> locate(const Vector2& p) const;
  Vector2 cell_center(CellIndex idx) const;
  Box2 cell_box(CellIndex idx) const;
  Box2 bounds() const;

  const Array& static_layer() const { return lambda_static_; }
  const Array& kind_layer(ObstacleKind kind) const { return lambda_kind_[dynamic_slot(kind)]; }

  void set_static(CellIndex idx, Scalar lambda);
  void set_kind(CellIndex idx, ObstacleKind kind, Scalar lambda);
  void set_velocity(CellIndex idx, const std::optional<CellVelocityDistribution>& dist);
  const std::optional<CellVelocityDistribution>& velocity(CellIndex idx) const { return velocity_[idx]; }

  CellStateT<Scalar> cell(CellIndex idx) const;
  void set_cell(CellIndex idx, const CellStateT<Scalar>& state);

  /// Expected intensity of a cell: static plus every dynamic kind.
  Scalar expected_lambda(CellIndex idx) const;

  /// Sum over cells of da * E[lambda].
  Scalar integrated_intensity() const;

  /// Moves the grid window by whole cells; cells scrolled in are reset to `fill`.
  void shift(int dx_cells, int dy_cells, Scalar fill = 0);

 private:
  int width_;
  int height_;
  Scalar cell_size_;
  Vector2 origin_;
  Array lambda_static_;
  std::array<Array, kNumDynamicKinds> lambda_kind_;
  std::vector<std::optional<CellVelocityDistribution>> velocity_;
};

using LambdaGrid = LambdaGridT<double>;
using CellState = CellStateT<double>;

struct PathStep {
  CellIndex cell = 0;
  double time = 0.0;
};

/// Ordered cells crossed by one candidate robot trajectory.
struct PathPlan {
  std::vector<PathStep> steps;
  double area_step = 0.0;    // m^2 per cell
  double robot_width = 1.0;  // m

  std::size_t size() const { return steps.size(); }
  double total_area() const { return static_cast<double>(steps.size()) * area_step; }
  /// Curvilinear abscissa of step i.
  double abscissa(std::size_t i) const { return static_cast<double>(i) * area_step / robot_width; }
  /// Throws DomainError when times decrease or the geometry is invalid.
  void validate() const;
};

/// 1 - exp(-area * lambda).
template <typename Scalar>
Scalar cell_collision_probability(Scalar expected_lambda, Scalar area) {
  if (!(expected_lambda >= 0) || !(area >= 0))
    throw DomainError("cell_collision_probability: negative intensity or area");
  return -std::expm1(-area * expected_lambda);
}

/// Collision probability of crossing cells with the given expected intensities, each of
/// area `area`: 1 - exp(-sum(area * lambda_i)).
template <typename Derived>
typename Derived::Scalar path_collision_probability(const Eigen::ArrayBase<Derived>& expected_lambdas,
                                                    typename Derived::Scalar area) {
  using Scalar = typename Derived::Scalar;
  if (!(area >= 0)) throw DomainError("path_collision_probability: negative area");
  if (expected_lambdas.size() > 0 && !(expected_lambdas.minCoeff() >= Scalar(0)))
    throw DomainError("path_collision_probability: negative intensity");
  return -std::expm1(-area * expected_lambdas.sum());
}

/// Path collision probability reading the expected intensities from the grid snapshot.
double path_collision_probability(const PathPlan& path, const LambdaGrid& field);

/// Expected intensities of the path cells at their snapshot values.
Eigen::ArrayXd path_expected_lambdas(const PathPlan& path, const LambdaGrid& field);

/// Splits every cell into factor^2 sub-cells carrying the same intensities.
template <typename Scalar>
LambdaGridT<Scalar> refine_grid(const LambdaGridT<Scalar>& field, int factor);

/// Visits every cell crossed by the segment [a, b] in traversal order (exact grid
/// line-walk). The visitor receives the cell index and the entry/exit parameters in [0, 1].
template <typename Visitor>
void for_each_cell_on_segment(const LambdaGrid& grid, const Vec2& a, const Vec2& b, Visitor&& visit);

void write_snapshot(std::ostream& os, const LambdaGrid& grid);
LambdaGrid read_snapshot(std::istream& is);

}  // namespace dlf

#include "dlf/lambda_core_impl.hpp"
