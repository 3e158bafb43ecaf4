#include "morph/fe_mesh.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>
#include <unordered_map>

#include "morph/errors.hpp"

namespace morph {

double FeMesh::triangle_area(std::size_t t) const {
  const auto &tri = triangles[t];
  return 0.5 * cross(vertices[tri[1]] - vertices[tri[0]],
                     vertices[tri[2]] - vertices[tri[0]]);
}

double FeMesh::total_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += triangle_area(t);
  return a;
}

double tag_tolerance(const Polygon &domain) { return 1e-8 * domain_length(domain); }

namespace {

class VertexWelder {
 public:
  explicit VertexWelder(double tol) : tol_(tol), bin_(4.0 * tol) {}

  int insert(Point2 p) {
    const auto [bx, by] = bin_of(p);
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        auto it = grid_.find(key(bx + dx, by + dy));
        if (it == grid_.end()) continue;
        for (int id : it->second) {
          if (distance(points_[id], p) <= tol_) return id;
        }
      }
    }
    const int id = static_cast<int>(points_.size());
    points_.push_back(p);
    grid_[key(bx, by)].push_back(id);
    return id;
  }

  int append_unwelded(Point2 p) {
    points_.push_back(p);
    return static_cast<int>(points_.size()) - 1;
  }

  const std::vector<Point2> &points() const { return points_; }

 private:
  std::pair<long, long> bin_of(Point2 p) const {
    return {static_cast<long>(std::floor(p.x / bin_)),
            static_cast<long>(std::floor(p.y / bin_))};
  }
  static std::uint64_t key(long x, long y) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) |
           static_cast<std::uint32_t>(y);
  }

  double tol_;
  double bin_;
  std::vector<Point2> points_;
  std::unordered_map<std::uint64_t, std::vector<int>> grid_;
};

void drop_repeats(std::vector<int> &loop) {
  std::vector<int> out;
  for (int v : loop) {
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  while (out.size() > 1 && out.front() == out.back()) out.pop_back();
  loop = std::move(out);
}

}  // namespace

void tag_boundaries(FeMesh &mesh, const Polygon &domain, const BoundarySpec &boundary) {
  const double tol = tag_tolerance(domain);
  const std::size_t nv = mesh.vertices.size();
  mesh.fixed.assign(nv, 0);
  mesh.actuated.assign(nv, 0);
  for (std::size_t v = 0; v < nv; ++v) {
    const Point2 p = mesh.vertices[v];
    for (const Segment &s : boundary.fixed) {
      if (distance_to_segment(p, s.a, s.b) <= tol) mesh.fixed[v] = 1;
    }
    for (const Segment &s : boundary.actuated) {
      if (distance_to_segment(p, s.a, s.b) <= tol) mesh.actuated[v] = 1;
    }
  }
  if (!boundary.fixed.empty() &&
      std::none_of(mesh.fixed.begin(), mesh.fixed.end(), [](auto f) { return f; })) {
    throw MeshTaggingError(
        "no mesh vertex lies on the fixed boundary; refine the mesh or check the "
        "fixed segments");
  }
  if (!boundary.actuated.empty() &&
      std::none_of(mesh.actuated.begin(), mesh.actuated.end(),
                   [](auto f) { return f; })) {
    throw MeshTaggingError(
        "no mesh vertex lies on the actuated boundary; refine the mesh or check "
        "the actuation segment");
  }
  mesh.target_nodes.assign(boundary.states.size(), {});
  mesh.target_snap_distance.assign(boundary.states.size(), {});
  for (std::size_t j = 0; j < boundary.states.size(); ++j) {
    for (const TargetPoint &t : boundary.states[j].targets) {
      int best = -1;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t v = 0; v < nv; ++v) {
        const double d = distance(mesh.vertices[v], t.point);
        if (d < best_d) {
          best_d = d;
          best = static_cast<int>(v);
        }
      }
      mesh.target_nodes[j].push_back(best);
      mesh.target_snap_distance[j].push_back(best_d);
    }
  }
}

FeMesh extract_fe_mesh(const PowerDiagram &diagram, const BoundarySpec *boundary) {
  const std::size_t n = diagram.size();
  const double tol = weld_tolerance(diagram.domain);
  const double L = domain_length(diagram.domain);
  VertexWelder welder(tol);

  // Weld every piece loop.
  std::vector<std::vector<std::vector<int>>> loops(n);
  for (std::size_t i = 0; i < n; ++i) {
    const PowerCell &cell = diagram.cells[i];
    if (cell.empty()) {
      throw InvalidGeometry("cell " + std::to_string(i) + " is empty");
    }
    for (const auto &piece : cell.pieces) {
      std::vector<int> loop;
      loop.reserve(piece.vertices.size());
      for (const Point2 &p : piece.vertices) loop.push_back(welder.insert(p));
      drop_repeats(loop);
      if (loop.size() >= 3) loops[i].push_back(std::move(loop));
    }
  }

  // Vertices of a neighbor lying inside one of our edges become vertices of
  // that edge too, so neighboring cells share every edge node.
  const auto &pts = welder.points();
  for (std::size_t i = 0; i < n; ++i) {
    std::set<int> candidates;
    for (const auto &nb : diagram.cells[i].neighbors) {
      for (const auto &loop : loops[nb.cell]) candidates.insert(loop.begin(), loop.end());
    }
    for (auto &loop : loops[i]) {
      std::vector<int> refined;
      const std::size_t m = loop.size();
      for (std::size_t k = 0; k < m; ++k) {
        const int a = loop[k];
        const int b = loop[(k + 1) % m];
        refined.push_back(a);
        const Point2 pa = pts[a];
        const Point2 pb = pts[b];
        const Point2 e = pb - pa;
        const double len2 = dot(e, e);
        if (len2 == 0.0) continue;
        std::vector<std::pair<double, int>> inner;
        for (int c : candidates) {
          if (c == a || c == b) continue;
          const double t = dot(pts[c] - pa, e) / len2;
          if (t <= 0.0 || t >= 1.0) continue;
          if (distance_to_segment(pts[c], pa, pb) <= tol) inner.emplace_back(t, c);
        }
        std::sort(inner.begin(), inner.end());
        for (const auto &[t, c] : inner) refined.push_back(c);
      }
      drop_repeats(refined);
      loop = std::move(refined);
    }
  }

  // Triangulate.
  std::vector<Point2> verts(pts);
  std::vector<std::array<int, 3>> tris;
  std::vector<int> tri_cell;
  std::vector<int> site_vertex(n, -1);
  const double area_floor = 1e-14 * L * L;
  for (std::size_t i = 0; i < n; ++i) {
    bool any = false;
    for (const auto &loop : loops[i]) {
      std::vector<Point2> ring;
      ring.reserve(loop.size());
      for (int v : loop) ring.push_back(verts[v]);
      const Point2 site = diagram.sites[i];
      const bool inside = site_vertex[i] < 0 && point_in_polygon(ring, site, tol);
      const auto local = triangulate_ring(
          ring, inside ? std::optional<Point2>(site) : std::nullopt, tol);
      const int m = static_cast<int>(loop.size());
      int site_id = -1;
      for (const auto &t : local) {
        std::array<int, 3> g{};
        for (int k = 0; k < 3; ++k) {
          if (t[k] < m) {
            g[k] = loop[t[k]];
          } else {
            if (site_id < 0) {
              site_id = static_cast<int>(verts.size());
              verts.push_back(site);
            }
            g[k] = site_id;
          }
        }
        const double a = 0.5 * cross(verts[g[1]] - verts[g[0]], verts[g[2]] - verts[g[0]]);
        if (a <= area_floor) continue;
        tris.push_back(g);
        tri_cell.push_back(static_cast<int>(i));
        any = true;
      }
      if (site_id >= 0) site_vertex[i] = site_id;
    }
    if (!any) {
      throw InvalidGeometry("cell " + std::to_string(i) + " produced no triangles");
    }
  }

  // Compact away vertices that no triangle uses.
  std::vector<int> remap(verts.size(), -1);
  FeMesh mesh;
  for (auto &t : tris) {
    for (int &v : t) {
      if (remap[v] < 0) {
        remap[v] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(verts[v]);
      }
      v = remap[v];
    }
  }
  mesh.triangles = std::move(tris);
  mesh.tri_cell = std::move(tri_cell);
  mesh.cell_loops.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto &loop : loops[i]) {
      std::vector<int> out;
      for (int v : loop) {
        if (remap[v] >= 0) out.push_back(remap[v]);
      }
      if (out.size() >= 3) mesh.cell_loops[i].push_back(std::move(out));
    }
  }
  mesh.cell_site_vertex.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    mesh.cell_site_vertex[i] = site_vertex[i] >= 0 ? remap[site_vertex[i]] : -1;
  }
  if (boundary) tag_boundaries(mesh, diagram.domain, *boundary);
  return mesh;
}

}  // namespace morph
