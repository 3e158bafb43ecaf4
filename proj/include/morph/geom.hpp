#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace morph {

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point2 &, const Point2 &) = default;
};

inline Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
inline Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
inline Point2 operator*(double s, Point2 a) { return {s * a.x, s * a.y}; }
inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 a) { return std::hypot(a.x, a.y); }
inline double distance(Point2 a, Point2 b) { return norm(a - b); }
inline double squared_distance(Point2 a, Point2 b) {
  const Point2 d = a - b;
  return dot(d, d);
}

// Vertices in counter-clockwise order; no repeated closing vertex.
struct Polygon {
  std::vector<Point2> vertices;

  std::size_t size() const { return vertices.size(); }
  bool empty() const { return vertices.empty(); }
  friend bool operator==(const Polygon &, const Polygon &) = default;
};

// Half-plane {x : normal . x <= offset}. `label` travels with the edge a
// clip creates along the boundary line.
struct HalfPlane {
  Point2 normal;
  double offset = 0.0;
  int label = -1;

  double eval(Point2 p) const { return dot(normal, p) - offset; }
};

// Polygon whose edge i (vertices[i] -> vertices[i+1]) carries labels[i].
struct LabeledPolygon {
  std::vector<Point2> vertices;
  std::vector<int> labels;
};

struct BoundingBox {
  Point2 lo;
  Point2 hi;
  double max_extent() const { return std::max(hi.x - lo.x, hi.y - lo.y); }
};

using Triangle = std::array<Point2, 3>;

/// Shoelace area. Positive for counter-clockwise vertex order, negative for
/// clockwise. Throws InvalidGeometry for fewer than three vertices.
double polygon_area(const Polygon &p);
double signed_area(std::span<const Point2> ring);

/// Area-weighted centroid. Throws InvalidGeometry for (near) zero area.
Point2 polygon_centroid(const Polygon &p);

/// Integral of |x - c|^2 over the polygon.
double polygon_second_moment(std::span<const Point2> ring, Point2 c);

BoundingBox bounding_box(std::span<const Point2> pts);

bool is_convex(std::span<const Point2> ring, double tol = 0.0);

/// Strict containment test: false for points within `tol` of the boundary.
bool point_in_polygon(std::span<const Point2> ring, Point2 p, double tol = 0.0);

double distance_to_segment(Point2 p, Point2 a, Point2 b);
double distance_to_boundary(std::span<const Point2> ring, Point2 p);
Point2 closest_point_on_segment(Point2 p, Point2 a, Point2 b);

/// True when no two non-adjacent edges intersect.
bool is_simple(std::span<const Point2> ring);

/// Clip `subject` by a half-plane. Non-convex subjects may split into
/// several pieces; each returned piece is counter-clockwise. Edges created
/// along the clip line get `h.label`.
std::vector<LabeledPolygon> clip_halfplane(const LabeledPolygon &subject,
                                           const HalfPlane &h, double tol);

/// Sequential clip against half-planes (Sutherland-Hodgman for convex
/// subjects; splits into pieces otherwise).
std::vector<LabeledPolygon> clip_pieces(const LabeledPolygon &subject,
                                        std::span<const HalfPlane> planes,
                                        double tol);

/// Intersection of `subject` with the convex polygon `clip`. Returns an empty
/// polygon when they do not overlap. When a non-convex subject splits, the
/// largest piece is returned; use clip_pieces to get all of them.
Polygon clip_polygon(const Polygon &subject, const Polygon &clip);
Polygon clip_polygon(const Polygon &subject, std::span<const HalfPlane> planes);

/// Half-planes whose intersection is the convex CCW polygon.
std::vector<HalfPlane> halfplanes_of_convex(const Polygon &convex);

/// Triangulate a simple polygon ring, optionally including one interior
/// point (index ring.size() in the output). Convex rings with an interior
/// point become a fan through it; everything else is a constrained Delaunay
/// triangulation of the ring edges with no added points. Points within
/// `tol` of the boundary are not inserted.
std::vector<std::array<int, 3>> triangulate_ring(std::span<const Point2> ring,
                                                 std::optional<Point2> site,
                                                 double tol);

std::vector<Triangle> triangulate_cell(const Polygon &cell, Point2 site);

}  // namespace morph
