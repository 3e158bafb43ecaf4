#include <doctest.h>

#include <cmath>
#include <random>

#include "morph/errors.hpp"
#include "morph/geom.hpp"

using namespace morph;

namespace {

Polygon unit_square() { return {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}}; }
Polygon l_shape() { return {{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}}; }

double triangulated_area(std::span<const Point2> pts, const std::vector<std::array<int, 3>> &tris,
                         double *min_area = nullptr) {
  double total = 0.0;
  double lo = INFINITY;
  for (const auto &t : tris) {
    const double a = 0.5 * cross(pts[t[1]] - pts[t[0]], pts[t[2]] - pts[t[0]]);
    total += a;
    lo = std::min(lo, a);
  }
  if (min_area) *min_area = lo;
  return total;
}

}  // namespace

TEST_CASE("polygon_area") {
  CHECK(polygon_area(unit_square()) == doctest::Approx(1.0));
  CHECK(polygon_area({{{0, 0}, {1, 0}, {0, 1}}}) == doctest::Approx(0.5));
  Polygon cw = unit_square();
  std::reverse(cw.vertices.begin(), cw.vertices.end());
  CHECK(polygon_area(cw) == doctest::Approx(-1.0));
  CHECK_THROWS_AS(polygon_area({{{0, 0}, {1, 0}}}), InvalidGeometry);
}

TEST_CASE("polygon_centroid") {
  Point2 c = polygon_centroid(unit_square());
  CHECK(c.x == doctest::Approx(0.5));
  CHECK(c.y == doctest::Approx(0.5));
  c = polygon_centroid({{{0, 0}, {3, 0}, {0, 3}}});
  CHECK(c.x == doctest::Approx(1.0));
  CHECK(c.y == doctest::Approx(1.0));
  // Two rectangles: [0,2]x[0,1] centroid (1,0.5) and [0,1]x[1,2] centroid (0.5,1.5).
  c = polygon_centroid(l_shape());
  CHECK(c.x == doctest::Approx((2 * 1.0 + 1 * 0.5) / 3).epsilon(1e-14));
  CHECK(c.y == doctest::Approx((2 * 0.5 + 1 * 1.5) / 3).epsilon(1e-14));
  CHECK_THROWS_AS(polygon_centroid({{{0, 0}, {1, 0}, {2, 0}}}), InvalidGeometry);
}

TEST_CASE("second moment of the unit square about its center") {
  const auto sq = unit_square();
  CHECK(polygon_second_moment(sq.vertices, {0.5, 0.5}) == doctest::Approx(1.0 / 6.0));
  // Parallel-axis shift.
  CHECK(polygon_second_moment(sq.vertices, {0, 0}) == doctest::Approx(1.0 / 6.0 + 0.5));
}

TEST_CASE("clip_polygon") {
  const Polygon sq = unit_square();
  SUBCASE("by itself") {
    const Polygon r = clip_polygon(sq, sq);
    CHECK(polygon_area(r) == doctest::Approx(1.0));
    CHECK(r.size() == 4);
  }
  SUBCASE("by x <= 0.5") {
    const HalfPlane h{{1, 0}, 0.5, -1};
    const Polygon r = clip_polygon(sq, std::span<const HalfPlane>(&h, 1));
    CHECK(polygon_area(r) == doctest::Approx(0.5));
  }
  SUBCASE("inner cell unchanged") {
    const Polygon inner{{{0.2, 0.2}, {0.6, 0.3}, {0.4, 0.7}}};
    const Polygon r = clip_polygon(inner, sq);
    CHECK(polygon_area(r) == doctest::Approx(polygon_area(inner)).epsilon(1e-14));
    CHECK(r.size() == 3);
  }
  SUBCASE("disjoint") {
    const Polygon far{{{5, 5}, {6, 5}, {6, 6}}};
    CHECK(clip_polygon(far, sq).empty());
  }
}

TEST_CASE("non-convex subject splits into pieces") {
  // U shape cut by y <= 1.5 stays one piece; cut by y >= 1.5 gives two arms.
  const LabeledPolygon u{{{0, 0}, {3, 0}, {3, 2}, {2, 2}, {2, 1}, {1, 1}, {1, 2}, {0, 2}},
                         {-1, -2, -3, -4, -5, -6, -7, -8}};
  const HalfPlane upper{{0, -1}, -1.5, 7};
  const auto pieces = clip_halfplane(u, upper, 1e-12);
  REQUIRE(pieces.size() == 2);
  for (const auto &p : pieces) {
    CHECK(signed_area(p.vertices) == doctest::Approx(0.5));
    int on_line = 0;
    for (int l : p.labels) on_line += l == 7;
    CHECK(on_line == 1);
  }
  const HalfPlane lower{{0, 1}, 1.5, 7};
  const auto one = clip_halfplane(u, lower, 1e-12);
  REQUIRE(one.size() == 1);
  CHECK(signed_area(one[0].vertices) == doctest::Approx(4.0));
}

TEST_CASE("clip area never exceeds either operand") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  const Polygon sq = unit_square();
  for (int trial = 0; trial < 200; ++trial) {
    // Random convex quad from a rotated rectangle.
    const Point2 c{u(rng), u(rng)};
    const double a = 0.3 + std::abs(u(rng)), b = 0.3 + std::abs(u(rng));
    const double th = u(rng);
    const Point2 ex{std::cos(th), std::sin(th)}, ey{-std::sin(th), std::cos(th)};
    Polygon rect{{c - a * ex - b * ey, c + a * ex - b * ey, c + a * ex + b * ey,
                  c - a * ex + b * ey}};
    const Polygon r = clip_polygon(l_shape(), rect);
    const double area = r.empty() ? 0.0 : polygon_area(r);
    CHECK(area <= std::min(3.0, polygon_area(rect)) + 1e-12 * 3.0);
  }
}

TEST_CASE("triangulate_ring") {
  const Polygon sq = unit_square();
  SUBCASE("convex ring with interior site is a fan") {
    const auto tris = triangulate_ring(sq.vertices, Point2{0.5, 0.5}, 1e-12);
    CHECK(tris.size() == 4);
    std::vector<Point2> pts = sq.vertices;
    pts.push_back({0.5, 0.5});
    CHECK(triangulated_area(pts, tris) == doctest::Approx(1.0));
  }
  SUBCASE("triangle with interior site") {
    const Polygon t{{{0, 0}, {1, 0}, {0, 1}}};
    CHECK(triangulate_cell(t, {0.2, 0.2}).size() == 3);
  }
  SUBCASE("L cell with its site") {
    const Polygon l = l_shape();
    const Point2 site{0.5, 0.5};
    const auto tris = triangulate_ring(l.vertices, site, 1e-12);
    std::vector<Point2> pts = l.vertices;
    pts.push_back(site);
    double lo = 0.0;
    const double total = triangulated_area(pts, tris, &lo);
    CHECK(std::abs(total - 3.0) <= 1e-12 * 3.0);
    CHECK(lo > 0.0);
    bool uses_site = false;
    for (const auto &t : tris) {
      for (int v : t) uses_site |= v == static_cast<int>(l.size());
    }
    CHECK(uses_site);
  }
  SUBCASE("site outside a convex cell") {
    const auto tris = triangulate_ring(sq.vertices, Point2{2, 2}, 1e-12);
    CHECK(tris.size() == 2);
  }
}

TEST_CASE("triangulations cover random star polygons") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int m = 5 + trial % 12;
    Polygon p;
    for (int i = 0; i < m; ++i) {
      const double th = 2 * M_PI * (i + 0.8 * u(rng)) / m;
      const double r = 0.4 + u(rng);
      p.vertices.push_back({r * std::cos(th), r * std::sin(th)});
    }
    const Point2 site{0.05 * u(rng), 0.05 * u(rng)};
    const auto tris = triangulate_cell(p, site);
    double total = 0.0, lo = INFINITY;
    Point2 moment{0, 0};
    for (const Triangle &t : tris) {
      const double a = 0.5 * cross(t[1] - t[0], t[2] - t[0]);
      total += a;
      lo = std::min(lo, a);
      moment = moment + (a / 3.0) * (t[0] + t[1] + t[2]);
    }
    const double area = polygon_area(p);
    CHECK(std::abs(total - area) <= 1e-10 * area);
    CHECK(lo > 0.0);
    const Point2 c = polygon_centroid(p);
    CHECK(distance((1.0 / total) * moment, c) <= 1e-10 * (1.0 + norm(c)));
  }
}

TEST_CASE("point_in_polygon and simplicity") {
  const Polygon l = l_shape();
  CHECK(point_in_polygon(l.vertices, {0.5, 1.5}));
  CHECK_FALSE(point_in_polygon(l.vertices, {1.5, 1.5}));
  CHECK(is_simple(l.vertices));
  const Polygon bowtie{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}};
  CHECK_FALSE(is_simple(bowtie.vertices));
  CHECK(is_convex(unit_square().vertices));
  CHECK_FALSE(is_convex(l.vertices));
}
