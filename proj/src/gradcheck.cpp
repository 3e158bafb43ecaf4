#include "morph/gradcheck.hpp"

#include <cmath>
#include <random>

#include "morph/errors.hpp"
#include "morph/objective.hpp"

namespace morph {

namespace {

double fd_scale(std::span<const double> fd) {
  double m = 0.0;
  for (double v : fd) m = std::max(m, std::abs(v));
  return m;
}

FamilyCheck compare(const std::string &name, std::span<const double> adj,
                    std::span<const double> fd) {
  FamilyCheck c;
  c.family = name;
  const double scale = fd_scale(fd);
  double worst = -1.0;
  for (std::size_t i = 0; i < adj.size(); ++i) {
    const double e = std::abs(adj[i] - fd[i]);
    if (e > worst) {
      worst = e;
      c.worst_index = i;
    }
  }
  c.max_relative_error = scale > 0.0 ? worst / scale : worst;
  c.adjoint_at_worst = adj[c.worst_index];
  c.fd_at_worst = fd[c.worst_index];
  return c;
}

}  // namespace

ProblemSpec random_problem(std::uint64_t seed, std::size_t states) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double w = 20.0 + 20.0 * u(rng);
  const double h = 8.0 + 8.0 * u(rng);
  ProblemSpec p;
  p.name = "random";
  p.domain.vertices = {{0, 0}, {w, 0}, {w, h}, {0, h}};
  p.boundary.fixed = {{{0, 0}, {0, h}}};
  const double a = (0.3 + 0.4 * u(rng)) * w;
  p.boundary.actuated = {{{a - 0.1 * w, 0}, {a + 0.1 * w, 0}}};
  p.boundary.u_actuation = {0.0, 1.0 + 2.0 * u(rng)};
  for (std::size_t j = 0; j < states; ++j) {
    TargetState st;
    const Point2 at{w, (0.2 + 0.6 * u(rng)) * h};
    const double sign = j % 2 == 0 ? 1.0 : -1.0;
    st.targets.push_back({"t", at, {2.0 * (u(rng) - 0.5), sign * (1.0 + 2.0 * u(rng))}});
    p.boundary.states.push_back(std::move(st));
  }
  p.material_name = "AG50";
  p.material = builtin_material("AG50");
  p.mesh.cells = 6;
  p.optimizer.seed = seed;
  return normalize_problem(std::move(p));
}

GradientCheckReport gradient_check(const ProblemSpec &problem, const GradientCheckOptions &opts) {
  ProblemSpec p = problem;
  p.mesh.cells = static_cast<int>(opts.cells);
  p.mesh.v_min.reset();
  p.mesh.v_max.reset();
  p.optimizer.seed = opts.seed;
  p = normalize_problem(std::move(p));
  const std::size_t n = opts.cells;
  const std::size_t k = p.num_states();

  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(0.15, 0.85);
  std::uniform_real_distribution<double> uphi(0.8, 1.25);
  DesignVariables d = initial_design(n, k);
  for (double &r : d.rho) r = u(rng);
  for (auto &row : d.eta) {
    for (double &e : row) e = u(rng);
  }
  for (double &f : d.phi) f = uphi(rng);

  MorphObjective obj(p);
  obj.set_r_max(opts.r_max);
  const Evaluation base = obj.evaluate(d, false);
  obj.accept(base);
  const auto disc = base.discretization;
  Evaluation ev = evaluate_on_mesh(p, disc, d, opts.r_max, true);
  DesignGradient &g = *ev.gradient;
  if (opts.corrupt_gradient) {
    g.rho[0] += 0.1 * (std::abs(g.rho[0]) + 1.0);
  }

  auto f_at = [&](const DesignVariables &x) {
    return evaluate_on_mesh(p, disc, x, opts.r_max, false).breakdown.total;
  };
  const double h = 1e-4;
  GradientCheckReport rep;
  std::vector<double> fd(n);
  for (std::size_t c = 0; c < n; ++c) {
    DesignVariables a = d, b = d;
    a.rho[c] += h;
    b.rho[c] -= h;
    fd[c] = (f_at(a) - f_at(b)) / (2 * h);
  }
  rep.families.push_back(compare("rho", g.rho, fd));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t c = 0; c < n; ++c) {
      DesignVariables a = d, b = d;
      a.eta[j][c] += h;
      b.eta[j][c] -= h;
      fd[c] = (f_at(a) - f_at(b)) / (2 * h);
    }
    rep.families.push_back(compare("eta" + std::to_string(j + 1), g.eta[j], fd));
  }

  // Central differences converge as h^2: successive differences of the
  // estimates at h, h/2, h/4 shrink by a factor of 4.
  const double h0 = 1e3 * MorphObjective::default_phi_step(d.phi);
  rep.phi_steps = {h0, h0 / 2, h0 / 4};
  std::vector<std::vector<double>> est;
  for (double step : rep.phi_steps) est.push_back(obj.phi_gradient(d, step));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    num += std::pow(est[0][i] - est[1][i], 2);
    den += std::pow(est[1][i] - est[2][i], 2);
  }
  rep.phi_richardson_ratio = den > 0.0 ? std::sqrt(num / den) : 0.0;

  rep.passed = rep.phi_richardson_ratio >= 3.5 && rep.phi_richardson_ratio <= 4.5;
  for (const FamilyCheck &c : rep.families) rep.passed &= c.max_relative_error < 1e-5;
  return rep;
}

}  // namespace morph
