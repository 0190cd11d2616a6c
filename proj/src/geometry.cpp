#include "dlf/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace dlf {

double wrap_angle(double angle) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle + std::numbers::pi, two_pi);
  if (a < 0.0) a += two_pi;
  a -= std::numbers::pi;
  // fmod can land exactly on +pi after the shift back.
  return a >= std::numbers::pi ? a - two_pi : a;
}

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const Polygon& polygon) {
  double twice = 0.0;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) twice += cross(polygon[i], polygon[(i + 1) % n]);
  return 0.5 * twice;
}

Box2 bounding_box(const Polygon& polygon) {
  Box2 box{Vec2::Constant(std::numeric_limits<double>::infinity()),
           Vec2::Constant(-std::numeric_limits<double>::infinity())};
  for (const auto& p : polygon) {
    box.min = box.min.cwiseMin(p);
    box.max = box.max.cwiseMax(p);
  }
  return box;
}

Polygon convex_hull(std::vector<Vec2> points) {
  std::sort(points.begin(), points.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());
  if (points.size() < 3) return points;

  Polygon hull(2 * points.size());
  std::size_t k = 0;
  for (const auto& p : points) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = points.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], points[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
  Polygon output = subject;
  const std::size_t n = clip.size();
  for (std::size_t e = 0; e < n && !output.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2 edge = clip[(e + 1) % n] - a;
    Polygon input;
    input.swap(output);
    const std::size_t m = input.size();
    for (std::size_t i = 0; i < m; ++i) {
      const Vec2& cur = input[i];
      const Vec2& prev = input[(i + m - 1) % m];
      const double dc = cross(edge, cur - a);
      const double dp = cross(edge, prev - a);
      if (dc >= 0.0) {
        if (dp < 0.0) output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
        output.push_back(cur);
      } else if (dp >= 0.0) {
        output.push_back(prev + (cur - prev) * (dp / (dp - dc)));
      }
    }
  }
  return output;
}

double overlap_area(const Polygon& a, const Polygon& convex_b) {
  const Polygon clipped = clip_convex(a, convex_b);
  return clipped.size() < 3 ? 0.0 : std::abs(signed_area(clipped));
}

bool contains_convex(const Polygon& convex_ccw, const Vec2& point) {
  const std::size_t n = convex_ccw.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(convex_ccw[(i + 1) % n] - convex_ccw[i], point - convex_ccw[i]) < 0.0) return false;
  }
  return true;
}

Polygon oriented_rectangle(const Vec2& center, double length, double width, double heading) {
  const Vec2 u = heading_vector(heading) * (0.5 * length);
  const Vec2 v = Vec2(-std::sin(heading), std::cos(heading)) * (0.5 * width);
  return {center - u - v, center + u - v, center + u + v, center - u + v};
}

Polygon box_polygon(const Box2& box) {
  return {box.min, {box.max.x(), box.min.y()}, box.max, {box.min.x(), box.max.y()}};
}

Polygon circle_polygon(const Vec2& center, double radius, int segments, bool circumscribe) {
  const double r = circumscribe ? radius / std::cos(std::numbers::pi / segments) : radius;
  Polygon poly;
  poly.reserve(segments);
  for (int i = 0; i < segments; ++i) {
    const double a = 2.0 * std::numbers::pi * i / segments;
    poly.push_back(center + r * heading_vector(a));
  }
  return poly;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

double point_polygon_distance(const Vec2& p, const Polygon& convex_ccw) {
  if (contains_convex(convex_ccw, p)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = convex_ccw.size();
  for (std::size_t i = 0; i < n; ++i)
    best = std::min(best, point_segment_distance(p, convex_ccw[i], convex_ccw[(i + 1) % n]));
  return best;
}

namespace {

Vec2 support(const Polygon& shape, const Vec2& d) {
  std::size_t best = 0;
  double best_dot = shape[0].dot(d);
  for (std::size_t i = 1; i < shape.size(); ++i) {
    const double v = shape[i].dot(d);
    if (v > best_dot) {
      best_dot = v;
      best = i;
    }
  }
  return shape[best];
}

struct Simplex {
  Vec2 pts[3];
  int size = 0;
};

// Closest point of the simplex to the origin; reduces the simplex to the supporting
// feature. Returns nullopt when the origin lies inside a full triangle.
std::optional<Vec2> closest_to_origin(Simplex& s) {
  auto segment = [](const Vec2& a, const Vec2& b, double& t) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    t = len2 > 0.0 ? std::clamp(-a.dot(ab) / len2, 0.0, 1.0) : 0.0;
    return Vec2(a + t * ab);
  };

  if (s.size == 1) return s.pts[0];
  if (s.size == 2) {
    double t = 0.0;
    const Vec2 p = segment(s.pts[0], s.pts[1], t);
    if (t <= 0.0) {
      s.size = 1;
    } else if (t >= 1.0) {
      s.pts[0] = s.pts[1];
      s.size = 1;
    }
    return p;
  }

  const Vec2 &a = s.pts[0], &b = s.pts[1], &c = s.pts[2];
  const double area = cross(b - a, c - a);
  const double d0 = cross(b - a, -a), d1 = cross(c - b, -b), d2 = cross(a - c, -c);
  if (area != 0.0) {
    const bool inside = area > 0.0 ? (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0)
                                   : (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0);
    if (inside) return std::nullopt;
  }

  const std::pair<int, int> edges[3] = {{0, 1}, {1, 2}, {2, 0}};
  double best = std::numeric_limits<double>::infinity();
  Simplex reduced;
  Vec2 best_point = Vec2::Zero();
  for (const auto& [i, j] : edges) {
    Simplex candidate;
    candidate.pts[0] = s.pts[i];
    candidate.pts[1] = s.pts[j];
    candidate.size = 2;
    double t = 0.0;
    const Vec2 p = segment(candidate.pts[0], candidate.pts[1], t);
    if (p.squaredNorm() < best) {
      best = p.squaredNorm();
      best_point = p;
      if (t <= 0.0) {
        candidate.size = 1;
      } else if (t >= 1.0) {
        candidate.pts[0] = candidate.pts[1];
        candidate.size = 1;
      }
      reduced = candidate;
    }
  }
  s = reduced;
  return best_point;
}

}  // namespace

double gjk_distance(const Polygon& a, const Polygon& b) {
  if (a.empty() || b.empty()) return std::numeric_limits<double>::infinity();
  auto minkowski_support = [&](const Vec2& d) { return Vec2(support(a, d) - support(b, -d)); };

  Simplex simplex;
  Vec2 v = a[0] - b[0];
  simplex.pts[0] = v;
  simplex.size = 1;
  constexpr double rel_tol = 1e-12;

  for (int iter = 0; iter < 100; ++iter) {
    const double vv = v.squaredNorm();
    if (vv <= 1e-24) return 0.0;
    const Vec2 w = minkowski_support(-v);
    if (vv - v.dot(w) <= rel_tol * vv) return std::sqrt(vv);
    for (int i = 0; i < simplex.size; ++i)
      if ((simplex.pts[i] - w).squaredNorm() <= 1e-24) return std::sqrt(vv);
    simplex.pts[simplex.size++] = w;
    const auto closest = closest_to_origin(simplex);
    if (!closest) return 0.0;
    if (closest->squaredNorm() >= vv) return std::sqrt(vv);
    v = *closest;
  }
  return v.norm();
}

std::optional<std::pair<double, double>> ray_box_interval(const Vec2& origin, const Vec2& direction,
                                                          const Box2& box, double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int k = 0; k < 2; ++k) {
    if (std::abs(direction[k]) < 1e-300) {
      if (origin[k] < box.min[k] || origin[k] > box.max[k]) return std::nullopt;
      continue;
    }
    double ta = (box.min[k] - origin[k]) / direction[k];
    double tb = (box.max[k] - origin[k]) / direction[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return std::nullopt;
  }
  return std::make_pair(t0, t1);
}

std::optional<double> ray_circle(const Vec2& origin, const Vec2& dir, const Vec2& center,
                                 double radius, double t_max) {
  const Vec2 f = origin - center;
  const double a = dir.squaredNorm();
  const double b = f.dot(dir);
  const double c = f.squaredNorm() - radius * radius;
  if (c <= 0.0) return 0.0;
  const double disc = b * b - a * c;
  if (disc < 0.0 || a == 0.0) return std::nullopt;
  const double t = (-b - std::sqrt(disc)) / a;
  if (t < 0.0 || t > t_max) return std::nullopt;
  return t;
}

std::optional<double> ray_polygon(const Vec2& origin, const Vec2& dir, const Polygon& polygon,
                                  double t_max) {
  std::optional<double> best;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = polygon[i];
    const Vec2 e = polygon[(i + 1) % n] - p;
    const double denom = cross(dir, e);
    if (std::abs(denom) < 1e-300) continue;
    const Vec2 d = p - origin;
    const double t = cross(d, e) / denom;
    const double u = cross(d, dir) / denom;
    if (t >= 0.0 && t <= t_max && u >= 0.0 && u <= 1.0 && (!best || t < *best)) best = t;
  }
  return best;
}

}  // namespace dlf
