#include "morph/geom.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <utility>

#include "morph/errors.hpp"

namespace morph {

double signed_area(std::span<const Point2> ring) {
  const std::size_t m = ring.size();
  double twice = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    twice += cross(ring[i], ring[(i + 1) % m]);
  }
  return 0.5 * twice;
}

double polygon_area(const Polygon &p) {
  if (p.size() < 3) {
    throw InvalidGeometry("polygon needs at least 3 vertices, got " +
                          std::to_string(p.size()));
  }
  return signed_area(p.vertices);
}

Point2 polygon_centroid(const Polygon &p) {
  const double area = polygon_area(p);
  const auto &v = p.vertices;
  const std::size_t m = v.size();
  const BoundingBox box = bounding_box(v);
  const double scale = box.max_extent();
  if (!(std::abs(area) > 1e-14 * scale * scale)) {
    throw InvalidGeometry("centroid of a zero-area polygon");
  }
  // Shift to the first vertex to limit cancellation.
  const Point2 o = v[0];
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Point2 a = v[i] - o;
    const Point2 b = v[(i + 1) % m] - o;
    const double c = cross(a, b);
    cx += (a.x + b.x) * c;
    cy += (a.y + b.y) * c;
  }
  return {o.x + cx / (6.0 * area), o.y + cy / (6.0 * area)};
}

double polygon_second_moment(std::span<const Point2> ring, Point2 c) {
  const std::size_t m = ring.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const Point2 a = ring[i] - c;
    const Point2 b = ring[(i + 1) % m] - c;
    sum += cross(a, b) * (dot(a, a) + dot(b, b) + dot(a, b));
  }
  return sum / 12.0;
}

BoundingBox bounding_box(std::span<const Point2> pts) {
  BoundingBox box{{std::numeric_limits<double>::infinity(),
                   std::numeric_limits<double>::infinity()},
                  {-std::numeric_limits<double>::infinity(),
                   -std::numeric_limits<double>::infinity()}};
  for (const Point2 &p : pts) {
    box.lo.x = std::min(box.lo.x, p.x);
    box.lo.y = std::min(box.lo.y, p.y);
    box.hi.x = std::max(box.hi.x, p.x);
    box.hi.y = std::max(box.hi.y, p.y);
  }
  return box;
}

bool is_convex(std::span<const Point2> ring, double tol) {
  const std::size_t m = ring.size();
  if (m < 3) return false;
  for (std::size_t i = 0; i < m; ++i) {
    const Point2 a = ring[(i + m - 1) % m];
    const Point2 b = ring[i];
    const Point2 c = ring[(i + 1) % m];
    const Point2 e1 = b - a;
    const Point2 e2 = c - b;
    if (cross(e1, e2) < -tol * norm(e1) * norm(e2)) return false;
  }
  return true;
}

Point2 closest_point_on_segment(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

double distance_to_segment(Point2 p, Point2 a, Point2 b) {
  return distance(p, closest_point_on_segment(p, a, b));
}

double distance_to_boundary(std::span<const Point2> ring, Point2 p) {
  const std::size_t m = ring.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    best = std::min(best, distance_to_segment(p, ring[i], ring[(i + 1) % m]));
  }
  return best;
}

bool point_in_polygon(std::span<const Point2> ring, Point2 p, double tol) {
  const std::size_t m = ring.size();
  if (m < 3) return false;
  if (distance_to_boundary(ring, p) <= tol) return false;
  bool inside = false;
  for (std::size_t i = 0, j = m - 1; i < m; j = i++) {
    const Point2 a = ring[i];
    const Point2 b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

namespace {

int orientation(Point2 a, Point2 b, Point2 c) {
  const double v = cross(b - a, c - a);
  return (v > 0) - (v < 0);
}

bool on_segment(Point2 a, Point2 b, Point2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point2 p1, Point2 p2, Point2 q1, Point2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

}  // namespace

bool is_simple(std::span<const Point2> ring) {
  const std::size_t m = ring.size();
  if (m < 3) return false;
  for (std::size_t i = 0; i < m; ++i) {
    const Point2 a = ring[i];
    const Point2 b = ring[(i + 1) % m];
    if (a == b) return false;
    // Adjacent edges folding back onto each other.
    const Point2 c = ring[(i + 2) % m];
    if (cross(b - a, c - b) == 0.0 && dot(b - a, c - b) < 0.0) return false;
    for (std::size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j == m - 1) continue;
      if (segments_intersect(a, b, ring[j], ring[(j + 1) % m])) return false;
    }
  }
  return true;
}

namespace {

struct Chain {
  std::vector<Point2> pts;
  std::vector<int> labels;
  bool degenerate = true;
};

void remove_duplicates(LabeledPolygon &poly, double tol) {
  auto &v = poly.vertices;
  auto &l = poly.labels;
  bool changed = true;
  while (changed && v.size() > 1) {
    changed = false;
    for (std::size_t k = 0; k < v.size(); ++k) {
      const std::size_t next = (k + 1) % v.size();
      if (next != k && distance(v[k], v[next]) <= tol) {
        // Drop the earlier copy so the surviving edge keeps the label that
        // follows the duplicate.
        v.erase(v.begin() + static_cast<long>(k));
        l.erase(l.begin() + static_cast<long>(k));
        changed = true;
        break;
      }
    }
  }
}

}  // namespace

std::vector<LabeledPolygon> clip_halfplane(const LabeledPolygon &subject,
                                           const HalfPlane &h, double tol) {
  const auto &p = subject.vertices;
  const auto &lab = subject.labels;
  const std::size_t m = p.size();
  if (m < 3) return {};

  std::vector<double> d(m);
  bool any_in = false;
  bool any_out = false;
  for (std::size_t i = 0; i < m; ++i) {
    d[i] = h.eval(p[i]);
    if (std::abs(d[i]) <= tol) d[i] = 0.0;
    if (d[i] <= 0.0) any_in = true;
    if (d[i] > 0.0) any_out = true;
  }
  if (!any_out) return {subject};
  if (!any_in) return {};

  std::size_t start = 0;
  while (d[start] <= 0.0) ++start;

  std::vector<Chain> chains;
  Chain *open = nullptr;
  for (std::size_t step = 1; step <= m; ++step) {
    const std::size_t a = (start + step - 1) % m;
    const std::size_t b = (start + step) % m;
    const bool in_a = d[a] <= 0.0;
    const bool in_b = d[b] <= 0.0;
    if (!in_a && in_b) {
      chains.emplace_back();
      open = &chains.back();
      if (d[b] != 0.0) {
        const double t = d[a] / (d[a] - d[b]);
        open->pts.push_back(p[a] + t * (p[b] - p[a]));
        open->labels.push_back(lab[a]);
      }
      open->pts.push_back(p[b]);
      open->labels.push_back(lab[b]);
      if (d[b] < 0.0) open->degenerate = false;
    } else if (in_a && in_b) {
      open->pts.push_back(p[b]);
      open->labels.push_back(lab[b]);
      if (d[b] < 0.0) open->degenerate = false;
    } else if (in_a && !in_b) {
      if (d[a] != 0.0) {
        const double t = d[a] / (d[a] - d[b]);
        open->pts.push_back(p[a] + t * (p[b] - p[a]));
        open->labels.push_back(h.label);
      } else {
        open->labels.back() = h.label;
      }
      open = nullptr;
    }
  }

  std::erase_if(chains, [](const Chain &c) { return c.degenerate; });
  if (chains.empty()) return {};

  const Point2 dir{-h.normal.y, h.normal.x};
  const std::size_t nc = chains.size();
  std::vector<std::size_t> succ(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    const double s_exit = dot(dir, chains[c].pts.back());
    std::size_t best = nc;
    double best_gap = std::numeric_limits<double>::infinity();
    std::size_t fallback = c;
    double fallback_gap = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < nc; ++e) {
      const double gap = dot(dir, chains[e].pts.front()) - s_exit;
      if (gap >= -tol && gap < best_gap) {
        best_gap = gap;
        best = e;
      }
      if (std::abs(gap) < fallback_gap) {
        fallback_gap = std::abs(gap);
        fallback = e;
      }
    }
    succ[c] = best < nc ? best : fallback;
  }

  std::vector<LabeledPolygon> pieces;
  std::vector<bool> used(nc, false);
  for (std::size_t c0 = 0; c0 < nc; ++c0) {
    if (used[c0]) continue;
    LabeledPolygon piece;
    std::size_t c = c0;
    while (!used[c]) {
      used[c] = true;
      piece.vertices.insert(piece.vertices.end(), chains[c].pts.begin(),
                            chains[c].pts.end());
      piece.labels.insert(piece.labels.end(), chains[c].labels.begin(),
                          chains[c].labels.end());
      c = succ[c];
    }
    remove_duplicates(piece, tol);
    if (piece.vertices.size() >= 3 && signed_area(piece.vertices) > 0.0) {
      pieces.push_back(std::move(piece));
    }
  }
  return pieces;
}

std::vector<LabeledPolygon> clip_pieces(const LabeledPolygon &subject,
                                        std::span<const HalfPlane> planes,
                                        double tol) {
  std::vector<LabeledPolygon> current{subject};
  for (const HalfPlane &h : planes) {
    std::vector<LabeledPolygon> next;
    for (const auto &piece : current) {
      auto out = clip_halfplane(piece, h, tol);
      for (auto &o : out) next.push_back(std::move(o));
    }
    current = std::move(next);
    if (current.empty()) break;
  }
  return current;
}

std::vector<HalfPlane> halfplanes_of_convex(const Polygon &convex) {
  std::vector<HalfPlane> planes;
  const auto &v = convex.vertices;
  const std::size_t m = v.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Point2 a = v[i];
    const Point2 b = v[(i + 1) % m];
    const Point2 e = b - a;
    const double len = norm(e);
    if (len == 0.0) continue;
    // Interior lies to the left of a CCW edge.
    const Point2 n{e.y / len, -e.x / len};
    planes.push_back({n, dot(n, a), static_cast<int>(i)});
  }
  return planes;
}

namespace {

LabeledPolygon unlabeled(const Polygon &p) {
  return {p.vertices, std::vector<int>(p.size(), -1)};
}

double default_tol(const Polygon &p) {
  return 1e-12 * std::max(bounding_box(p.vertices).max_extent(), 1e-300);
}

Polygon largest(std::vector<LabeledPolygon> pieces) {
  if (pieces.empty()) return {};
  auto it = std::max_element(pieces.begin(), pieces.end(),
                             [](const auto &a, const auto &b) {
                               return signed_area(a.vertices) <
                                      signed_area(b.vertices);
                             });
  return {std::move(it->vertices)};
}

}  // namespace

Polygon clip_polygon(const Polygon &subject, std::span<const HalfPlane> planes) {
  if (subject.size() < 3) {
    throw InvalidGeometry("clip subject needs at least 3 vertices");
  }
  return largest(clip_pieces(unlabeled(subject), planes, default_tol(subject)));
}

Polygon clip_polygon(const Polygon &subject, const Polygon &clip) {
  if (clip.size() < 3) {
    throw InvalidGeometry("clip window needs at least 3 vertices");
  }
  const auto planes = halfplanes_of_convex(clip);
  return clip_polygon(subject, planes);
}

// ---------------------------------------------------------------------------
// Triangulation

namespace {

using Tri = std::array<int, 3>;

double orient(const std::vector<Point2> &pts, int a, int b, int c) {
  return cross(pts[b] - pts[a], pts[c] - pts[a]);
}

bool in_closed_triangle(Point2 p, Point2 a, Point2 b, Point2 c, double eps) {
  const double d1 = cross(b - a, p - a);
  const double d2 = cross(c - b, p - b);
  const double d3 = cross(a - c, p - c);
  return d1 >= -eps && d2 >= -eps && d3 >= -eps;
}

std::vector<Tri> ear_clip(const std::vector<Point2> &pts, int m, double tol) {
  std::vector<int> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<Tri> tris;
  const double area_eps = tol * tol;
  while (idx.size() > 3) {
    const std::size_t r = idx.size();
    std::size_t chosen = r;
    double fallback_cross = -std::numeric_limits<double>::infinity();
    std::size_t fallback = 0;
    for (std::size_t k = 0; k < r; ++k) {
      const int a = idx[(k + r - 1) % r];
      const int b = idx[k];
      const int c = idx[(k + 1) % r];
      const double cr = orient(pts, a, b, c);
      if (cr > fallback_cross) {
        fallback_cross = cr;
        fallback = k;
      }
      if (cr <= area_eps) continue;
      bool clear = true;
      for (std::size_t q = 0; q < r && clear; ++q) {
        const int v = idx[q];
        if (v == a || v == b || v == c) continue;
        const Point2 pv = pts[v];
        if (distance(pv, pts[a]) <= tol || distance(pv, pts[b]) <= tol ||
            distance(pv, pts[c]) <= tol) {
          continue;
        }
        if (in_closed_triangle(pv, pts[a], pts[b], pts[c], area_eps)) {
          clear = false;
        }
      }
      if (clear) {
        chosen = k;
        break;
      }
    }
    if (chosen == r) chosen = fallback;
    const int a = idx[(chosen + r - 1) % r];
    const int b = idx[chosen];
    const int c = idx[(chosen + 1) % r];
    if (orient(pts, a, b, c) > area_eps) tris.push_back({a, b, c});
    idx.erase(idx.begin() + static_cast<long>(chosen));
  }
  if (orient(pts, idx[0], idx[1], idx[2]) > area_eps) {
    tris.push_back({idx[0], idx[1], idx[2]});
  }
  return tris;
}

// Positive when d lies inside the circumcircle of CCW triangle (a, b, c).
double incircle(Point2 a, Point2 b, Point2 c, Point2 d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double ad = adx * adx + ady * ady;
  const double bd = bdx * bdx + bdy * bdy;
  const double cd = cdx * cdx + cdy * cdy;
  return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) +
         ad * (bdx * cdy - bdy * cdx);
}

void lawson_flips(const std::vector<Point2> &pts, int ring_size,
                  std::vector<Tri> &tris, double scale) {
  auto constrained = [ring_size](int u, int v) {
    if (u >= ring_size || v >= ring_size) return false;
    const int d = std::abs(u - v);
    return d == 1 || d == ring_size - 1;
  };
  const double eps = 1e-12 * scale * scale * scale * scale;
  for (int sweep = 0; sweep < 200; ++sweep) {
    std::map<std::pair<int, int>, std::pair<int, int>> edge_owner;
    for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
      for (int k = 0; k < 3; ++k) {
        edge_owner[{tris[t][k], tris[t][(k + 1) % 3]}] = {t, k};
      }
    }
    bool flipped = false;
    for (const auto &[edge, owner] : edge_owner) {
      const auto [u, v] = edge;
      if (u > v || constrained(u, v)) continue;
      auto it = edge_owner.find({v, u});
      if (it == edge_owner.end()) continue;
      const auto [t1, k1] = owner;
      const auto [t2, k2] = it->second;
      const int a = tris[t1][(k1 + 2) % 3];
      const int b = tris[t2][(k2 + 2) % 3];
      if (incircle(pts[u], pts[v], pts[a], pts[b]) <= eps) continue;
      // The quad u, b, v, a must be strictly convex for the flip.
      if (orient(pts, a, u, b) <= 0.0 || orient(pts, b, v, a) <= 0.0) continue;
      tris[t1] = {a, u, b};
      tris[t2] = {b, v, a};
      flipped = true;
      break;
    }
    if (!flipped) return;
  }
}

void insert_point(const std::vector<Point2> &pts, int s, std::vector<Tri> &tris,
                  double scale) {
  const Point2 p = pts[s];
  const double eps = 1e-13 * scale * scale;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto [a, b, c] = tris[t];
    const double w[3] = {cross(pts[b] - pts[a], p - pts[a]),
                         cross(pts[c] - pts[b], p - pts[b]),
                         cross(pts[a] - pts[c], p - pts[c])};
    if (w[0] < -eps || w[1] < -eps || w[2] < -eps) continue;
    int on_edge = -1;
    for (int k = 0; k < 3; ++k) {
      if (std::abs(w[k]) <= eps) on_edge = k;
    }
    const Tri tri = tris[t];
    if (on_edge < 0) {
      tris[t] = {a, b, s};
      tris.push_back({b, c, s});
      tris.push_back({c, a, s});
      return;
    }
    const int u = tri[on_edge];
    const int v = tri[(on_edge + 1) % 3];
    const int opp = tri[(on_edge + 2) % 3];
    tris[t] = {v, opp, s};
    tris.push_back({opp, u, s});
    for (std::size_t q = 0; q < tris.size(); ++q) {
      if (q == t) continue;
      for (int k = 0; k < 3; ++k) {
        if (tris[q][k] == v && tris[q][(k + 1) % 3] == u) {
          const int other = tris[q][(k + 2) % 3];
          tris[q] = {u, other, s};
          tris.push_back({other, v, s});
          return;
        }
      }
    }
    return;
  }
}

}  // namespace

std::vector<std::array<int, 3>> triangulate_ring(std::span<const Point2> ring,
                                                 std::optional<Point2> site,
                                                 double tol) {
  const int m = static_cast<int>(ring.size());
  if (m < 3) throw InvalidGeometry("cannot triangulate fewer than 3 vertices");
  const double scale = bounding_box(ring).max_extent();
  const bool use_site = site && point_in_polygon(ring, *site, tol);

  std::vector<Point2> pts(ring.begin(), ring.end());
  if (use_site) pts.push_back(*site);

  std::vector<Tri> tris;
  if (use_site && is_convex(ring, 1e-12)) {
    for (int i = 0; i < m; ++i) {
      const int j = (i + 1) % m;
      if (orient(pts, i, j, m) > 0.0) tris.push_back({i, j, m});
    }
    return tris;
  }

  tris = ear_clip(pts, m, tol);
  lawson_flips(pts, m, tris, scale);
  if (use_site) {
    insert_point(pts, m, tris, scale);
    lawson_flips(pts, m, tris, scale);
  }
  return tris;
}

std::vector<Triangle> triangulate_cell(const Polygon &cell, Point2 site) {
  if (cell.size() < 3) throw InvalidGeometry("empty cell");
  const double tol = 1e-9 * bounding_box(cell.vertices).max_extent();
  const auto idx = triangulate_ring(cell.vertices, site, tol);
  std::vector<Triangle> out;
  out.reserve(idx.size());
  for (const auto &t : idx) {
    auto at = [&](int i) {
      return i < static_cast<int>(cell.size()) ? cell.vertices[i] : site;
    };
    out.push_back({at(t[0]), at(t[1]), at(t[2])});
  }
  return out;
}

}  // namespace morph
