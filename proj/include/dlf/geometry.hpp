#pragma once

#include <Eigen/Core>

#include <cmath>
#include <optional>
#include <utility>
#include <vector>

namespace dlf {

using Vec2 = Eigen::Vector2d;
using Polygon = std::vector<Vec2>;

struct Pose2 {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
};

/// Axis-aligned box, closed on all sides.
struct Box2 {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();

  bool contains(const Vec2& p) const {
    return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
  }
  bool overlaps(const Box2& o) const {
    return min.x() <= o.max.x() && o.min.x() <= max.x() && min.y() <= o.max.y() &&
           o.min.y() <= max.y();
  }
  double area() const { return (max - min).prod(); }
};

inline Vec2 heading_vector(double heading) { return {std::cos(heading), std::sin(heading)}; }

/// Wraps an angle into [-pi, pi).
double wrap_angle(double angle);

double cross(const Vec2& a, const Vec2& b);

/// Signed area, positive for counter-clockwise vertex order.
double signed_area(const Polygon& polygon);

Box2 bounding_box(const Polygon& polygon);

/// Andrew's monotone chain. Output is counter-clockwise without repeated points.
Polygon convex_hull(std::vector<Vec2> points);

/// Sutherland-Hodgman clip of `subject` against the convex, counter-clockwise `clip`.
Polygon clip_convex(const Polygon& subject, const Polygon& clip);

double overlap_area(const Polygon& a, const Polygon& convex_b);

bool contains_convex(const Polygon& convex_ccw, const Vec2& point);

/// Oriented rectangle, counter-clockwise.
Polygon oriented_rectangle(const Vec2& center, double length, double width, double heading);

Polygon box_polygon(const Box2& box);

/// Regular polygon circumscribing the circle when `circumscribe` is set, inscribed otherwise.
Polygon circle_polygon(const Vec2& center, double radius, int segments, bool circumscribe = false);

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b);

/// Distance from a point to a convex polygon (0 inside).
double point_polygon_distance(const Vec2& p, const Polygon& convex_ccw);

/// Gilbert-Johnson-Keerthi distance between two convex vertex sets. Returns 0 when the
/// hulls intersect or touch.
double gjk_distance(const Polygon& a, const Polygon& b);

inline bool gjk_intersects(const Polygon& a, const Polygon& b) { return gjk_distance(a, b) <= 1e-12; }

/// Parametric interval [t0, t1] within [0, t_max] during which `origin + t * direction`
/// lies inside `box` (slab method).
std::optional<std::pair<double, double>> ray_box_interval(const Vec2& origin, const Vec2& direction,
                                                          const Box2& box, double t_max);

/// Nearest intersection parameter of segment origin + t*dir (t in [0, t_max]) with a
/// circle, or nullopt.
std::optional<double> ray_circle(const Vec2& origin, const Vec2& dir, const Vec2& center,
                                 double radius, double t_max);

/// Nearest intersection parameter with the boundary of a polygon (any winding).
std::optional<double> ray_polygon(const Vec2& origin, const Vec2& dir, const Polygon& polygon,
                                  double t_max);

}  // namespace dlf
