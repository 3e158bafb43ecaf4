#include <doctest.h>

#include <cmath>

#include "morph/errors.hpp"
#include "morph/fem.hpp"

using namespace morph;

namespace {

Polygon rectangle(double w, double h) { return {{{0, 0}, {w, 0}, {w, h}, {0, h}}}; }

FeMesh rect_mesh(double w, double h, std::size_t n, std::uint64_t seed) {
  const Polygon dom = rectangle(w, h);
  const std::vector<double> t(n, w * h / n);
  const auto r = solve_centroidal_vcpd(dom, t, random_sites(dom, n, seed));
  return extract_fe_mesh(r.diagram, nullptr);
}

bool on_rect_boundary(Point2 p, double w, double h) {
  const double tol = 1e-9 * std::max(w, h);
  return std::abs(p.x) < tol || std::abs(p.y) < tol || std::abs(p.x - w) < tol ||
         std::abs(p.y - h) < tol;
}

}  // namespace

TEST_CASE("material interpolation") {
  const MaterialParams ag50;  // defaults are the 50% dither
  CHECK(interpolate_modulus(1.0, 0.0, ag50) == 120.0);
  CHECK(interpolate_modulus(1.0, 1.0, ag50) == 2.9);
  CHECK(interpolate_modulus(0.5, 0.0, ag50) == doctest::Approx(15.0));
  CHECK_THROWS_AS(interpolate_modulus(1.5, 0.0, ag50), InvalidInput);
  CHECK_THROWS_AS(interpolate_modulus(0.5, -0.1, ag50), InvalidInput);
  CHECK_THROWS_AS(interpolate_modulus(0.0, 0.0, ag50), InvalidInput);
}

TEST_CASE("modulus gradient matches finite differences") {
  const MaterialParams m;
  for (double rho : {0.01, 0.3, 0.77}) {
    for (double eta : {0.1, 0.5, 0.9}) {
      const double h = 1e-6;
      const ModulusGradient g = modulus_gradient(rho, eta, m);
      const double fr = (interpolate_modulus(rho + h, eta, m) - interpolate_modulus(rho - h, eta, m)) / (2 * h);
      const double fe = (interpolate_modulus(rho, eta + h, m) - interpolate_modulus(rho, eta - h, m)) / (2 * h);
      CHECK(g.d_rho == doctest::Approx(fr).epsilon(1e-7));
      CHECK(g.d_eta == doctest::Approx(fe).epsilon(1e-7));
    }
  }
}

TEST_CASE("single element matrix") {
  FeMesh m;
  m.vertices = {{0, 0}, {2, 0.3}, {0.4, 1.5}};
  m.triangles = {{0, 1, 2}};
  m.tri_cell = {0};
  m.cell_loops = {{{0, 1, 2}}};
  m.cell_site_vertex = {-1};
  const ElasticModel model(m, MaterialParams{});
  const Matrix6d &k = model.unit_element(0);
  CHECK((k - k.transpose()).norm() <= 1e-14 * k.norm());
  for (int r = 0; r < 6; ++r) {
    CHECK(std::abs(k(r, 0) + k(r, 2) + k(r, 4)) <= 1e-13 * k.norm());
    CHECK(std::abs(k(r, 1) + k(r, 3) + k(r, 5)) <= 1e-13 * k.norm());
  }
  // Rigid rotation about the origin carries no energy.
  Eigen::Matrix<double, 6, 1> rot;
  for (int v = 0; v < 3; ++v) {
    rot[2 * v] = -m.vertices[v].y;
    rot[2 * v + 1] = m.vertices[v].x;
  }
  CHECK((k * rot).norm() <= 1e-13 * k.norm());

  FeMesh flipped = m;
  flipped.triangles = {{0, 2, 1}};
  CHECK_THROWS_AS(ElasticModel(flipped, MaterialParams{}), AssemblyError);
}

TEST_CASE("assembled stiffness") {
  const FeMesh mesh = rect_mesh(4, 2, 6, 3);
  const ElasticModel model(mesh, MaterialParams{});
  std::vector<double> e(mesh.num_cells());
  for (std::size_t c = 0; c < e.size(); ++c) e[c] = 10.0 + c;
  const SparseMatrix k = model.assemble(e);
  const Eigen::MatrixXd kd = Eigen::MatrixXd(k);
  CHECK((kd - kd.transpose()).norm() <= 1e-13 * kd.norm());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(kd);
  const auto ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  int zero = 0;
  for (int i = 0; i < ev.size(); ++i) {
    CHECK(ev[i] >= -1e-10 * top);
    zero += std::abs(ev[i]) <= 1e-10 * top;
  }
  CHECK(zero == 3);

  std::vector<double> e2 = e;
  for (double &x : e2) x *= 2;
  CHECK((Eigen::MatrixXd(model.assemble(e2)) - 2 * kd).norm() <= 1e-13 * kd.norm());
}

TEST_CASE("patch test reproduces an affine field") {
  const double w = 3, h = 2;
  for (std::uint64_t seed : {1u, 2u}) {
    const FeMesh mesh = rect_mesh(w, h, 7, seed);
    MaterialParams mat;
    const ElasticModel model(mesh, mat);
    const std::vector<double> e(mesh.num_cells(), 50.0);
    const SparseMatrix k = model.assemble(e);
    auto affine = [](Point2 p) {
      return Point2{1e-3 + 2e-3 * p.x - 1e-3 * p.y, -2e-3 + 0.5e-3 * p.x + 3e-3 * p.y};
    };
    std::vector<int> dofs;
    Eigen::VectorXd pres = Eigen::VectorXd::Zero(model.num_dofs());
    int interior = 0;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      if (!on_rect_boundary(mesh.vertices[v], w, h)) {
        ++interior;
        continue;
      }
      const Point2 u = affine(mesh.vertices[v]);
      dofs.push_back(2 * v);
      dofs.push_back(2 * v + 1);
      pres[2 * v] = u.x;
      pres[2 * v + 1] = u.y;
    }
    REQUIRE(interior > 0);
    const ConstrainedSolver solver(k, dofs);
    const StateSolution s = solver.solve(Eigen::VectorXd::Zero(model.num_dofs()), pres);
    double err = 0.0, scale = 0.0;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
      const Point2 u = affine(mesh.vertices[v]);
      err = std::max(err, std::hypot(s.u[2 * v] - u.x, s.u[2 * v + 1] - u.y));
      scale = std::max(scale, norm(u));
    }
    CHECK(err <= 1e-10 * scale);
    const Eigen::Vector3d s0 = model.stress(0, s.u, 50.0);
    for (std::size_t t = 1; t < mesh.triangles.size(); ++t) {
      CHECK((model.stress(t, s.u, 50.0) - s0).norm() <= 1e-10 * s0.norm());
    }
  }
}

TEST_CASE("bar under end displacement") {
  const double L = 10, H = 2, delta = 0.05, E = 80.0;
  const FeMesh mesh = rect_mesh(L, H, 8, 4);
  MaterialParams mat;
  mat.nu = 0.3;
  const ElasticModel model(mesh, mat);
  const SparseMatrix k = model.assemble(std::vector<double>(mesh.num_cells(), E));
  const double tol = 1e-9 * L;
  std::vector<int> dofs;
  Eigen::VectorXd pres = Eigen::VectorXd::Zero(model.num_dofs());
  std::vector<int> right;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Point2 p = mesh.vertices[v];
    if (std::abs(p.x) < tol) {
      dofs.push_back(2 * v);
      if (std::abs(p.y) < tol) dofs.push_back(2 * v + 1);
    } else if (std::abs(p.x - L) < tol) {
      dofs.push_back(2 * v);
      pres[2 * v] = delta;
      right.push_back(static_cast<int>(v));
    }
  }
  const ConstrainedSolver solver(k, dofs);
  const StateSolution s = solver.solve(Eigen::VectorXd::Zero(model.num_dofs()), pres);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    CHECK(s.u[2 * v] == doctest::Approx(delta * mesh.vertices[v].x / L).epsilon(1e-10).scale(delta));
  }
  double reaction = 0.0;
  for (int v : right) reaction += s.reactions[2 * v];
  const double expected = E * H * mat.thickness * delta / L;
  CHECK(std::abs(reaction - expected) <= 1e-8 * expected);
  // Residual of the full system on free dofs.
  const Eigen::VectorXd r = k * s.u - s.reactions;
  CHECK(r.norm() <= 1e-10 * (k * s.u).norm());
}

TEST_CASE("state solves on a tagged mesh") {
  const Polygon dom = rectangle(4, 2);
  const std::vector<double> t(6, 8.0 / 6);
  const auto diagram = solve_centroidal_vcpd(dom, t, random_sites(dom, 6, 1)).diagram;
  BoundarySpec bc;
  bc.fixed = {{{0, 0}, {0, 2}}};
  bc.actuated = {{{4, 0}, {4, 2}}};
  bc.u_actuation = {0.1, 0.02};
  bc.states = {{{{"a", {2, 2}, {0, -1}}}}};
  const FeMesh mesh = extract_fe_mesh(diagram, bc);
  const ElasticModel model(mesh, MaterialParams{});
  const std::vector<double> e(6, 120.0);
  const SparseMatrix k = model.assemble(e);

  const StateSolution a = solve_state(k, mesh, bc, LoadCase::kActuation);
  std::vector<double> e3 = e;
  for (double &x : e3) x *= 3;
  const StateSolution b = solve_state(model.assemble(e3), mesh, bc, LoadCase::kActuation);
  CHECK((a.u - b.u).norm() <= 1e-10 * a.u.norm());
  CHECK((3 * a.reactions - b.reactions).norm() <= 1e-10 * b.reactions.norm());

  BoundarySpec still = bc;
  still.u_actuation = {0, 0};
  CHECK(solve_state(k, mesh, still, LoadCase::kActuation).u.norm() == 0.0);

  const StateSolution c = solve_state(k, mesh, bc, LoadCase::kConnectivity, 0);
  const Eigen::VectorXd f = connectivity_load_vector(mesh, bc, 0);
  CHECK(compliance(c.u, f) > 0.0);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (mesh.fixed[v] || mesh.actuated[v]) CHECK(c.u.segment(2 * v, 2).norm() == 0.0);
  }
}

TEST_CASE("pose error and connectivity loads") {
  Eigen::VectorXd u(4);
  u << 0.0, 8.2, 1.0, 2.0;
  const std::vector<int> one{1};
  CHECK(pose_error(u, one, std::vector<double>{8.0}) == doctest::Approx(0.2));
  const std::vector<int> two{2, 3};
  CHECK(pose_error(u, two, std::vector<double>{4.0, 6.0}) == doctest::Approx(5.0));
  CHECK(pose_error(u, two, std::vector<double>{1.0, 2.0}) == 0.0);
  CHECK_THROWS_AS(pose_error(u, std::vector<int>{}, std::vector<double>{}), InvalidInput);

  Vec2 f = connectivity_load({0, -8});
  CHECK(f.x == 0.0);
  CHECK(f.y == 1.0);
  f = connectivity_load({3, 4});
  CHECK(f.x == doctest::Approx(-0.6));
  CHECK(f.y == doctest::Approx(-0.8));
  const Vec2 g = connectivity_load({30, 40});
  CHECK(g.x == doctest::Approx(f.x));
  CHECK(g.y == doctest::Approx(f.y));
  CHECK_THROWS_AS(connectivity_load({0, 0}), InvalidInput);
}
