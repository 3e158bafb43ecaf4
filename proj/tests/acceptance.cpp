// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion
// numbers as arguments to run a subset.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

#include "morph/cli.hpp"
#include "morph/fem.hpp"
#include "morph/gradcheck.hpp"
#include "morph/optimize.hpp"

using namespace morph;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char *f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Area and centroid by the shoelace formula over all pieces.
std::pair<double, Point2> cell_moments(const PowerCell &c) {
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (const auto &piece : c.pieces) {
    const auto &v = piece.vertices;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const Point2 p = v[i], q = v[(i + 1) % v.size()];
      const double cr = p.x * q.y - q.x * p.y;
      a += cr / 2;
      cx += (p.x + q.x) * cr / 6;
      cy += (p.y + q.y) * cr / 6;
    }
  }
  return {a, {cx / a, cy / a}};
}

Outcome vcpd_correctness() {
  const Polygon sq{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  const std::size_t n = 16;
  const double eps = 1e-4 * 1.0 * (1.0 / n) * std::sqrt(8.0 * n);
  const std::vector<double> targets(n, 1.0 / n);
  double worst_area = 0.0, worst_grad = 0.0, worst_time = 0.0;
  bool all_converged = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t0 = Clock::now();
    const VcpdResult r = solve_centroidal_vcpd(sq, targets, random_sites(sq, n, seed));
    worst_time = std::max(worst_time, seconds_since(t0));
    all_converged &= r.converged;
    double g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto [a, c] = cell_moments(r.diagram.cells[i]);
      worst_area = std::max(worst_area, std::abs(a - 1.0 / n));
      const double g = 2.0 * a * std::hypot(r.diagram.sites[i].x - c.x, r.diagram.sites[i].y - c.y);
      g2 += g * g;
    }
    worst_grad = std::max(worst_grad, std::sqrt(g2));
  }
  return {all_converged && worst_area < 1e-6 && worst_grad < eps && worst_time < 5.0,
          fmt("max area error %.3g, max |grad E| %.3g (eps %.3g), slowest seed %.2f s",
              worst_area, worst_grad, eps, worst_time)};
}

Outcome voronoi_reduction() {
  const Polygon dom{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}};
  const auto sites = random_sites(dom, 20, 7);
  const std::vector<double> w(sites.size(), 0.0);
  const PowerDiagram d = build_power_diagram(sites, w, dom);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const double tol = 1e-9 * 2.0;
  int sampled = 0, skipped = 0, wrong = 0;
  while (sampled < 10000) {
    const Point2 x{u(rng), u(rng)};
    if (!point_in_polygon(dom.vertices, x, 0.0)) continue;
    ++sampled;
    std::vector<double> dist;
    for (const Point2 &s : sites) dist.push_back(std::hypot(x.x - s.x, x.y - s.y));
    const auto best = std::min_element(dist.begin(), dist.end()) - dist.begin();
    std::vector<double> sorted = dist;
    std::partial_sort(sorted.begin(), sorted.begin() + 2, sorted.end());
    if (sorted[1] - sorted[0] < tol) {
      ++skipped;
      continue;
    }
    bool inside = false;
    for (const auto &piece : d.cells[best].pieces) {
      inside |= point_in_polygon(piece.vertices, x, 0.0);
    }
    wrong += !inside;
  }
  return {wrong == 0, fmt("%d samples, %d misclassified, %d on boundaries", sampled, wrong,
                          skipped)};
}

FeMesh rect_mesh(double w, double h, std::size_t n, std::uint64_t seed) {
  const Polygon dom{{{0, 0}, {w, 0}, {w, h}, {0, h}}};
  const std::vector<double> t(n, w * h / n);
  return extract_fe_mesh(solve_centroidal_vcpd(dom, t, random_sites(dom, n, seed)).diagram,
                         nullptr);
}

Outcome fem_checks() {
  // Patch test: boundary nodes follow an affine field.
  const double w = 3, h = 2, tol = 1e-9 * w;
  const FeMesh mesh = rect_mesh(w, h, 9, 3);
  const MaterialParams mat;
  const ElasticModel model(mesh, mat);
  const SparseMatrix k = model.assemble(std::vector<double>(mesh.num_cells(), 50.0));
  auto affine = [](Point2 p) {
    return Point2{1e-3 + 2e-3 * p.x - 1e-3 * p.y, -2e-3 + 0.5e-3 * p.x + 3e-3 * p.y};
  };
  std::vector<int> dofs;
  Eigen::VectorXd pres = Eigen::VectorXd::Zero(model.num_dofs());
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Point2 p = mesh.vertices[v];
    if (std::abs(p.x) > tol && std::abs(p.y) > tol && std::abs(p.x - w) > tol &&
        std::abs(p.y - h) > tol) {
      continue;
    }
    dofs.insert(dofs.end(), {int(2 * v), int(2 * v + 1)});
    pres[2 * v] = affine(p).x;
    pres[2 * v + 1] = affine(p).y;
  }
  const StateSolution s =
      ConstrainedSolver(k, dofs).solve(Eigen::VectorXd::Zero(model.num_dofs()), pres);
  double err = 0.0, scale = 0.0;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    const Point2 u = affine(mesh.vertices[v]);
    err = std::max(err, std::hypot(s.u[2 * v] - u.x, s.u[2 * v + 1] - u.y));
    scale = std::max(scale, std::hypot(u.x, u.y));
  }
  const Eigen::Vector3d s0 = model.stress(0, s.u, 50.0);
  double stress_spread = 0.0;
  for (std::size_t t = 1; t < mesh.triangles.size(); ++t) {
    stress_spread = std::max(stress_spread, (model.stress(t, s.u, 50.0) - s0).norm());
  }
  const double patch_rel = err / scale, stress_rel = stress_spread / s0.norm();

  // Bar pulled by delta at x = L, free to contract laterally.
  const double L = 10, H = 2, delta = 0.05, E = 80.0;
  const FeMesh bar = rect_mesh(L, H, 8, 4);
  const ElasticModel bar_model(bar, mat);
  const SparseMatrix kb = bar_model.assemble(std::vector<double>(bar.num_cells(), E));
  std::vector<int> bdofs;
  Eigen::VectorXd bpres = Eigen::VectorXd::Zero(bar_model.num_dofs());
  std::vector<int> right;
  for (std::size_t v = 0; v < bar.vertices.size(); ++v) {
    const Point2 p = bar.vertices[v];
    if (std::abs(p.x) < 1e-9 * L) {
      bdofs.push_back(2 * v);
      if (std::abs(p.y) < 1e-9 * L) bdofs.push_back(2 * v + 1);
    } else if (std::abs(p.x - L) < 1e-9 * L) {
      bdofs.push_back(2 * v);
      bpres[2 * v] = delta;
      right.push_back(int(v));
    }
  }
  const StateSolution bs =
      ConstrainedSolver(kb, bdofs).solve(Eigen::VectorXd::Zero(bar_model.num_dofs()), bpres);
  double reaction = 0.0;
  for (int v : right) reaction += bs.reactions[2 * v];
  const double expected = E * H * mat.thickness * delta / L;
  const double bar_rel = std::abs(reaction - expected) / expected;
  return {patch_rel < 1e-10 && stress_rel < 1e-10 && bar_rel < 1e-8,
          fmt("patch nodal error %.3g, stress spread %.3g, bar reaction error %.3g", patch_rel,
              stress_rel, bar_rel)};
}

Outcome gradient_gate() {
  const auto t0 = Clock::now();
  bool pass = true;
  double worst = 0.0, ratio_lo = INFINITY, ratio_hi = -INFINITY;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ProblemSpec p = random_problem(seed, 2);
    GradientCheckOptions o;
    o.cells = 6;
    o.seed = seed;
    const GradientCheckReport r = gradient_check(p, o);
    for (const FamilyCheck &f : r.families) {
      worst = std::max(worst, f.max_relative_error);
      pass &= f.max_relative_error < 1e-5;
    }
    pass &= r.families.size() == 3;
    ratio_lo = std::min(ratio_lo, r.phi_richardson_ratio);
    ratio_hi = std::max(ratio_hi, r.phi_richardson_ratio);
    pass &= std::abs(r.phi_richardson_ratio - 4.0) <= 0.5;
  }
  const double t = seconds_since(t0);
  return {pass && t < 60.0, fmt("worst relative error %.3g, Richardson ratio in [%.3f, %.3f], "
                                "%.1f s",
                                worst, ratio_lo, ratio_hi, t)};
}

Outcome material_endpoints() {
  const MaterialParams m = builtin_material("AG50");
  const double cold = interpolate_modulus(1.0, 0.0, m), hot = interpolate_modulus(1.0, 1.0, m);
  bool monotone = true;
  for (double rho : {1.0, 0.5, 0.1}) {
    double prev = INFINITY;
    for (int i = 0; i < 100; ++i) {
      const double e = interpolate_modulus(rho, i / 99.0, m);
      monotone &= e < prev;
      prev = e;
    }
  }
  return {cold == 120.0 && hot == 2.9 && monotone,
          fmt("E(1,0) = %.17g, E(1,1) = %.17g, sweep %s", cold, hot,
              monotone ? "strictly decreasing" : "not monotone")};
}

bool projected(const DesignVariables &d, double floor) {
  bool ok = std::all_of(d.rho.begin(), d.rho.end(), [&](double r) { return r == floor || r == 1.0; });
  for (const auto &eta : d.eta) {
    ok &= std::all_of(eta.begin(), eta.end(), [](double e) { return e == 0.0 || e == 1.0; });
  }
  return ok;
}

double intermediate(const std::vector<double> &rho, double lo, double hi) {
  const auto c = std::count_if(rho.begin(), rho.end(),
                               [&](double r) { return r - lo > 0.1 && hi - r > 0.1; });
  return double(c) / double(rho.size());
}

Outcome binarization() {
  const ProblemSpec p = bundled_example("gingerbread");
  const auto t0 = Clock::now();
  const OptimizationResult r = optimize(p);
  const double t = seconds_since(t0);
  const double floor = p.material.rho_floor;
  const double end2 = intermediate(r.continuous.rho, floor, 1.0);
  const bool pass = p.mesh.cells <= 60 && p.num_states() == 2 && end2 < r.intermediate_phase1 &&
                    projected(r.design, floor) && t < 600.0;
  return {pass, fmt("intermediate rho %.3f after phase 1, %.3f after phase 2, %s, %.0f s",
                    r.intermediate_phase1, end2,
                    projected(r.design, floor) ? "projection binary" : "projection not binary",
                    t)};
}

Outcome multi_state() {
  const ProblemSpec p = bundled_example("airfoil");
  const OptimizationResult r = optimize(p);
  const FeMesh &mesh = r.discretization->mesh;
  bool pass = r.connectivity.connected && r.connectivity.components == 1;
  std::string detail;
  for (std::size_t j = 0; j < p.num_states(); ++j) {
    const auto &targets = p.boundary.states[j].targets;
    for (std::size_t t = 0; t < targets.size(); ++t) {
      const int v = mesh.target_nodes[j][t];
      const Vec2 ut = targets[t].u_target;
      const double un = std::hypot(ut.x, ut.y);
      const double along = (r.states[j].u[2 * v] * ut.x + r.states[j].u[2 * v + 1] * ut.y) / un;
      pass &= along >= 0.5 * un;
      detail += fmt("state %zu: %.3g of %.3g along target; ", j + 1, along, un);
    }
  }
  return {pass, detail + fmt("%d solid component(s), %s", r.connectivity.components,
                             r.connectivity.connected ? "connected" : "not connected")};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path base =
      fs::temp_directory_path() / ("morph_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(base);
  int codes[2];
  for (int i = 0; i < 2; ++i) {
    const std::string out = (base / std::to_string(i)).string();
    const char *argv[] = {"morph", "optimize", "gingerbread", "--seed", "3", "--phase1-max",
                          "8", "--phase2-max", "12", "--out", out.c_str(), "-q"};
    std::ostringstream sink;
    codes[i] = run_cli(12, argv, sink, sink);
  }
  bool same = codes[0] == codes[1] && codes[0] != kExitError;
  for (const char *f : {"convergence.csv", "design.json"}) {
    const std::string a = slurp(base / "0" / f), b = slurp(base / "1" / f);
    same &= !a.empty() && a == b;
  }
  fs::remove_all(base);
  return {same, same ? "convergence.csv and design.json byte-identical"
                     : fmt("runs differ (exit codes %d, %d)", codes[0], codes[1])};
}

Outcome regularization_endpoints() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0), span(1e-3, 10.0), rm(1e-6, 1e3);
  double worst_end = 0.0, worst_mid = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double lo = u(rng), hi = lo + span(rng), r_max = rm(rng);
    worst_end = std::max({worst_end, std::abs(regularization(lo, lo, hi, r_max)),
                          std::abs(regularization(hi, lo, hi, r_max))});
    const double mid = regularization(lo + (hi - lo) / 2, lo, hi, r_max);
    worst_mid = std::max(worst_mid, std::abs(mid - r_max) / r_max);
  }
  const double eps = std::numeric_limits<double>::epsilon();
  return {worst_end == 0.0 && worst_mid <= 4 * eps,
          fmt("max |R| at bounds %.3g, max relative midpoint error %.3g (%.1f ulp)", worst_end,
              worst_mid, worst_mid / eps)};
}

struct Criterion {
  int id;
  const char *name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char **argv) {
  const std::vector<Criterion> all = {
      {1, "centroidal volume-constrained diagram", vcpd_correctness},
      {2, "equal weights reduce to Voronoi", voronoi_reduction},
      {3, "patch test and bar reaction", fem_checks},
      {4, "adjoint and phi gradient gate", gradient_gate},
      {5, "material interpolation endpoints", material_endpoints},
      {6, "binarization across phases", binarization},
      {7, "two opposite target motions", multi_state},
      {8, "deterministic optimize output", determinism},
      {9, "regularization endpoints", regularization_endpoints},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const Criterion &c : all) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
