#include <doctest.h>

#include <set>

#include "morph/errors.hpp"
#include "morph/fe_mesh.hpp"

using namespace morph;

namespace {

Polygon unit_square() { return {{{0, 0}, {1, 0}, {1, 1}, {0, 1}}}; }

double mesh_area(const FeMesh &m) {
  double a = 0.0;
  for (std::size_t t = 0; t < m.triangles.size(); ++t) a += m.triangle_area(t);
  return a;
}

}  // namespace

TEST_CASE("single square cell is a fan") {
  const std::vector<Point2> s{{0.5, 0.5}};
  const PowerDiagram d = build_power_diagram(s, std::vector<double>{0.0}, unit_square());
  const FeMesh m = extract_fe_mesh(d, nullptr);
  CHECK(m.vertices.size() == 5);
  CHECK(m.triangles.size() == 4);
  CHECK(m.cell_site_vertex[0] >= 0);
  CHECK(mesh_area(m) == doctest::Approx(1.0));
}

TEST_CASE("neighbor cells share welded vertices") {
  const std::vector<Point2> s{{0.25, 0.5}, {0.75, 0.5}};
  const PowerDiagram d = build_power_diagram(s, std::vector<double>(2, 0.0), unit_square());
  const FeMesh m = extract_fe_mesh(d, nullptr);
  // Before welding: 4 + 4 ring vertices and 2 sites; the bisector endpoints
  // are shared, leaving 6 + 2.
  CHECK(m.vertices.size() == 8);
  std::set<std::pair<long, long>> keys;
  for (Point2 v : m.vertices) keys.insert({std::lround(v.x * 1e6), std::lround(v.y * 1e6)});
  CHECK(keys.size() == m.vertices.size());
}

TEST_CASE("mesh covers converged diagrams") {
  const Polygon l{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}};
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const std::size_t n = 10 + seed;
    const std::vector<double> t(n, 3.0 / n);
    const auto r = solve_centroidal_vcpd(l, t, random_sites(l, n, seed));
    const FeMesh m = extract_fe_mesh(r.diagram, nullptr);
    CHECK(std::abs(mesh_area(m) - 3.0) <= 1e-9 * 3.0);
    std::vector<int> per_cell(n, 0);
    for (std::size_t k = 0; k < m.triangles.size(); ++k) {
      CHECK(m.triangle_area(k) > 0.0);
      ++per_cell[m.tri_cell[k]];
    }
    for (int c : per_cell) CHECK(c >= 1);
  }
}

TEST_CASE("boundary tagging") {
  const std::vector<Point2> s{{0.25, 0.5}, {0.75, 0.5}};
  const PowerDiagram d = build_power_diagram(s, std::vector<double>(2, 0.0), unit_square());
  BoundarySpec bc;
  bc.fixed = {{{0, 0}, {0, 1}}};
  bc.actuated = {{{1, 0}, {1, 1}}};
  bc.u_actuation = {0.1, 0};
  bc.states = {{{{"a", {0.5, 1.0}, {0, 1}}}}};
  const FeMesh m = extract_fe_mesh(d, bc);
  int nf = 0, na = 0;
  for (std::size_t v = 0; v < m.vertices.size(); ++v) {
    nf += m.fixed[v];
    na += m.actuated[v];
    if (m.fixed[v]) CHECK(m.vertices[v].x == doctest::Approx(0.0));
  }
  CHECK(nf == 2);
  CHECK(na == 2);
  REQUIRE(m.target_nodes.size() == 1);
  CHECK(distance(m.vertices[m.target_nodes[0][0]], {0.5, 1.0}) < 1e-12);

  BoundarySpec off = bc;
  off.actuated = {{{0.3, 0.3}, {0.35, 0.3}}};
  CHECK_THROWS_AS(extract_fe_mesh(d, off), MeshTaggingError);
}
