#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dlf/geometry.hpp"

using namespace dlf;

namespace {

Polygon square(double x0, double y0, double side) {
  return {{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}};
}

// Brute-force distance between two non-intersecting polygons: min over vertex-edge pairs.
double brute_distance(const Polygon& a, const Polygon& b) {
  double d = 1e300;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (const auto& p : b) d = std::min(d, point_segment_distance(p, a[i], a[(i + 1) % a.size()]));
  for (std::size_t i = 0; i < b.size(); ++i)
    for (const auto& p : a) d = std::min(d, point_segment_distance(p, b[i], b[(i + 1) % b.size()]));
  return d;
}

}  // namespace

TEST_CASE("wrap_angle") {
  CHECK(wrap_angle(0.0) == doctest::Approx(0.0));
  CHECK(wrap_angle(3 * std::numbers::pi) == doctest::Approx(-std::numbers::pi));
  CHECK(wrap_angle(-0.5) == doctest::Approx(-0.5));
  CHECK(wrap_angle(2 * std::numbers::pi + 0.25) == doctest::Approx(0.25));
}

TEST_CASE("signed area and bounding box") {
  const Polygon s = square(1, 2, 3);
  CHECK(signed_area(s) == doctest::Approx(9.0));
  CHECK(signed_area(Polygon(s.rbegin(), s.rend())) == doctest::Approx(-9.0));
  const Box2 b = bounding_box(s);
  CHECK(b.min.x() == 1.0);
  CHECK(b.max.y() == 5.0);
  CHECK(b.area() == doctest::Approx(9.0));
}

TEST_CASE("convex hull contains every input point") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<Vec2> pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back(u(rng), u(rng));
  const Polygon hull = convex_hull(pts);
  CHECK(signed_area(hull) > 0.0);
  for (const auto& p : pts) CHECK(point_polygon_distance(p, hull) < 1e-12);
  // Interior points of a square do not change its hull.
  std::vector<Vec2> sq = square(0, 0, 1);
  sq.emplace_back(0.5, 0.5);
  sq.emplace_back(0.2, 0.7);
  CHECK(convex_hull(sq).size() == 4);
  CHECK(signed_area(convex_hull(sq)) == doctest::Approx(1.0));
}

TEST_CASE("overlap area of squares and a Monte Carlo oracle for rotated rectangles") {
  CHECK(overlap_area(square(0, 0, 1), square(0.5, 0.5, 1)) == doctest::Approx(0.25));
  CHECK(overlap_area(square(0, 0, 1), square(2, 2, 1)) == doctest::Approx(0.0));

  const Polygon a = oriented_rectangle({0, 0}, 2.0, 1.0, 0.3);
  const Polygon b = oriented_rectangle({0.6, 0.2}, 1.5, 0.8, -0.7);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2, 2);
  const int n = 400000;
  int inside = 0;
  for (int i = 0; i < n; ++i) {
    const Vec2 p(u(rng), u(rng));
    inside += contains_convex(a, p) && contains_convex(b, p);
  }
  const double frac = double(inside) / n;
  const double est = 16.0 * frac;
  const double se = 16.0 * std::sqrt(frac * (1 - frac) / n);
  CHECK(std::abs(overlap_area(a, b) - est) < 4 * se);
}

TEST_CASE("oriented rectangle geometry") {
  const Polygon r = oriented_rectangle({1, 1}, 2.0, 1.0, std::numbers::pi / 2);
  CHECK(signed_area(r) == doctest::Approx(2.0));
  const Box2 b = bounding_box(r);
  CHECK(b.min.x() == doctest::Approx(0.5));
  CHECK(b.max.y() == doctest::Approx(2.0));
}

TEST_CASE("circle polygon inscribed and circumscribed") {
  const Polygon in = circle_polygon({0, 0}, 1.0, 16, false);
  const Polygon out = circle_polygon({0, 0}, 1.0, 16, true);
  CHECK(signed_area(in) < std::numbers::pi);
  CHECK(signed_area(out) > std::numbers::pi);
  for (const auto& v : in) CHECK(v.norm() == doctest::Approx(1.0));
  for (int k = 0; k < 64; ++k) {
    const Vec2 p = 0.999 * heading_vector(k * 0.1);
    CHECK(contains_convex(out, p));
  }
}

TEST_CASE("point distances") {
  CHECK(point_segment_distance({0, 1}, {-1, 0}, {1, 0}) == doctest::Approx(1.0));
  CHECK(point_segment_distance({3, 4}, {0, 0}, {0, 0}) == doctest::Approx(5.0));
  CHECK(point_polygon_distance({0.5, 0.5}, square(0, 0, 1)) == 0.0);
  CHECK(point_polygon_distance({2, 1}, square(0, 0, 1)) == doctest::Approx(1.0));
  CHECK(point_polygon_distance({2, 2}, square(0, 0, 1)) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("GJK distance matches the brute-force oracle") {
  CHECK(gjk_distance(square(0, 0, 1), square(3, 0, 1)) == doctest::Approx(2.0));
  CHECK(gjk_intersects(square(0, 0, 1), square(0.5, 0.5, 1)));
  CHECK(gjk_intersects(square(0, 0, 1), square(1, 0, 1)));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(-4, 4), ang(-3, 3), len(0.2, 2);
  int separated = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Polygon a = oriented_rectangle({pos(rng), pos(rng)}, len(rng), len(rng), ang(rng));
    const Polygon b = circle_polygon({pos(rng), pos(rng)}, 0.5 * len(rng), 9);
    const double d = gjk_distance(a, b);
    if (overlap_area(a, b) > 1e-9) {
      CHECK(d <= 1e-9);
    } else if (d > 1e-9) {
      ++separated;
      CHECK(d == doctest::Approx(brute_distance(a, b)).epsilon(1e-9));
    }
  }
  CHECK(separated > 100);
}

TEST_CASE("ray box interval") {
  const Box2 box{{0, 0}, {2, 1}};
  auto r = ray_box_interval({-1, 0.5}, {1, 0}, box, 10.0);
  REQUIRE(r);
  CHECK(r->first == doctest::Approx(1.0));
  CHECK(r->second == doctest::Approx(3.0));
  CHECK_FALSE(ray_box_interval({-1, 2}, {1, 0}, box, 10.0));
  CHECK_FALSE(ray_box_interval({-1, 0.5}, {1, 0}, box, 0.5));
  r = ray_box_interval({1, 0.5}, {1, 0}, box, 10.0);
  REQUIRE(r);
  CHECK(r->first == 0.0);
}

TEST_CASE("ray circle and ray polygon") {
  auto t = ray_circle({-5, 0}, {1, 0}, {0, 0}, 1.0, 10.0);
  REQUIRE(t);
  CHECK(*t == doctest::Approx(4.0));
  CHECK_FALSE(ray_circle({-5, 2}, {1, 0}, {0, 0}, 1.0, 10.0));
  CHECK_FALSE(ray_circle({-5, 0}, {1, 0}, {0, 0}, 1.0, 3.0));
  // Oblique hit against the analytic solution of |o + t d - c| = r.
  const Vec2 o(-3, 0.5), d = Vec2(1, -0.1).normalized();
  t = ray_circle(o, d, {0, 0}, 1.0, 10.0);
  REQUIRE(t);
  CHECK((o + *t * d).norm() == doctest::Approx(1.0));

  auto tp = ray_polygon({-5, 0.5}, {1, 0}, square(0, 0, 1), 10.0);
  REQUIRE(tp);
  CHECK(*tp == doctest::Approx(5.0));
  const Polygon cw{{0, 0}, {0, 1}, {1, 1}, {1, 0}};
  tp = ray_polygon({0.5, 3}, {0, -1}, cw, 10.0);
  REQUIRE(tp);
  CHECK(*tp == doctest::Approx(2.0));
}
