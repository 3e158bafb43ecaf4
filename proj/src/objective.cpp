#include "morph/objective.hpp"

#include <cmath>
#include <numeric>

#include "morph/errors.hpp"

namespace morph {

DesignVariables initial_design(std::size_t cells, std::size_t states) {
  DesignVariables d;
  d.rho.assign(cells, 0.5);
  d.eta.assign(states, std::vector<double>(cells, 0.5));
  d.phi.assign(cells, 1.0);
  return d;
}

double ObjectiveBreakdown::sum_pose_error() const {
  return std::accumulate(pose_errors.begin(), pose_errors.end(), 0.0);
}

double ObjectiveBreakdown::sum_compliance() const {
  return std::accumulate(compliances.begin(), compliances.end(), 0.0);
}

double ObjectiveBreakdown::recomputed() const {
  return sum_pose_error() + alpha * sum_compliance() + regularization;
}

double regularization(double xi, double lo, double hi, double r_max) {
  if (!(hi > lo)) throw InvalidInput("regularization needs xi_max > xi_min");
  // Factored form of r_max (1 - ((xi - mid) / half)^2); exact zeros at the bounds.
  const double width = hi - lo;
  return 4.0 * r_max * (xi - lo) * (hi - xi) / (width * width);
}

double regularization_derivative(double xi, double lo, double hi, double r_max) {
  if (!(hi > lo)) throw InvalidInput("regularization needs xi_max > xi_min");
  const double width = hi - lo;
  return 4.0 * r_max * ((hi - xi) - (xi - lo)) / (width * width);
}

double project(double xi, double threshold, double lo, double hi) {
  return xi <= threshold ? lo : hi;
}

std::vector<double> project(std::span<const double> xi, double threshold, double lo,
                            double hi) {
  std::vector<double> out(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) out[i] = project(xi[i], threshold, lo, hi);
  return out;
}

double intermediate_fraction(std::span<const double> rho, double lo, double hi) {
  if (rho.empty()) return 0.0;
  std::size_t count = 0;
  for (double r : rho) count += (r - lo > 0.1 && hi - r > 0.1);
  return static_cast<double>(count) / static_cast<double>(rho.size());
}

std::vector<double> target_volumes(const ProblemSpec &problem, std::span<const double> phi) {
  const double area = problem.area();
  const auto v = relative_to_physical_volumes(phi, area);
  return clamp_volumes(v, problem.v_min(), problem.v_max(), area);
}

std::pair<double, double> phi_bounds(const ProblemSpec &problem) {
  const double n = problem.mesh.cells;
  if (n <= 1) return {1.0, 1.0};
  const double area = problem.area();
  const double lo = problem.v_min() * (n - 1) / (area - problem.v_min());
  const double hi = problem.v_max() < area ? problem.v_max() * (n - 1) / (area - problem.v_max())
                                           : 1e3;
  return {lo, hi};
}

namespace {

VcpdOptions vcpd_options(std::optional<int> fixed_steps) {
  VcpdOptions o;
  o.fixed_steps = fixed_steps;
  return o;
}

}  // namespace

Discretization discretize(const ProblemSpec &problem, std::span<const double> phi,
                          const SiteAnchor &anchor, std::optional<int> fixed_steps) {
  if (phi.size() != static_cast<std::size_t>(problem.mesh.cells)) {
    throw InvalidInput("phi has the wrong length");
  }
  const auto targets = target_volumes(problem, phi);
  VcpdResult r = solve_centroidal_vcpd(problem.domain, targets, anchor.sites, anchor.weights,
                                       vcpd_options(fixed_steps));
  Discretization d;
  d.mesh = extract_fe_mesh(r.diagram, problem.boundary);
  d.diagram = std::move(r.diagram);
  d.site_updates = r.site_updates;
  d.converged = r.converged;
  return d;
}

namespace {

void check_design(const ProblemSpec &problem, const DesignVariables &design) {
  const std::size_t n = problem.mesh.cells;
  if (design.rho.size() != n) throw InvalidInput("rho has the wrong length");
  if (design.eta.size() != problem.num_states()) {
    throw InvalidInput("eta needs one row per state");
  }
  for (const auto &row : design.eta) {
    if (row.size() != n) throw InvalidInput("eta row has the wrong length");
  }
}

std::vector<double> state_moduli(const ProblemSpec &problem, const DesignVariables &design,
                                 std::size_t state) {
  const std::size_t n = design.rho.size();
  std::vector<double> e(n);
  for (std::size_t c = 0; c < n; ++c) {
    e[c] = interpolate_modulus(design.rho[c], design.eta[state][c], problem.material);
  }
  return e;
}

}  // namespace

Evaluation evaluate_on_mesh(const ProblemSpec &problem,
                            std::shared_ptr<const Discretization> disc,
                            const DesignVariables &design, double r_max,
                            bool with_gradient) {
  check_design(problem, design);
  const FeMesh &mesh = disc->mesh;
  const std::size_t n = design.rho.size();
  const std::size_t k = problem.num_states();
  const MaterialParams &mat = problem.material;
  const double alpha = problem.optimizer.alpha;
  const ElasticModel model(mesh, mat);

  Evaluation ev;
  ev.discretization = disc;
  ev.breakdown.alpha = alpha;
  if (with_gradient) {
    DesignGradient g;
    g.rho.assign(n, 0.0);
    g.eta.assign(k, std::vector<double>(n, 0.0));
    ev.gradient = std::move(g);
  }

  const DirichletData act = dirichlet_conditions(mesh, problem.boundary, LoadCase::kActuation);
  std::vector<int> dofs;
  std::vector<double> values;
  for (std::size_t j = 0; j < k; ++j) {
    const std::vector<double> e = state_moduli(problem, design, j);
    const ConstrainedSolver solver(model.assemble(e), act.dofs);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(model.num_dofs());
    StateSolution u = solver.solve(zero, act.values);
    const Eigen::VectorXd fc = connectivity_load_vector(mesh, problem.boundary, j);
    StateSolution uc = solver.solve(fc, zero);
    u.eta = design.eta[j];
    uc.eta = design.eta[j];

    target_dofs(mesh, problem.boundary, j, dofs, values);
    const double J = pose_error(u.u, dofs, values);
    const double C = compliance(uc.u, fc);
    ev.breakdown.pose_errors.push_back(J);
    ev.breakdown.compliances.push_back(C);

    if (with_gradient) {
      // dJ/du = L^T L (u - u_T) / J on the target dofs.
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(model.num_dofs());
      const double denom = std::max(J, 1e-12);
      for (std::size_t q = 0; q < dofs.size(); ++q) {
        rhs[dofs[q]] += (u.u[dofs[q]] - values[q]) / denom;
      }
      const Eigen::VectorXd lambda = solver.solve_homogeneous(rhs);
      const std::vector<double> dj = model.cell_products(lambda, u.u);
      const std::vector<double> dc = model.cell_products(uc.u, uc.u);
      DesignGradient &g = *ev.gradient;
      for (std::size_t c = 0; c < n; ++c) {
        const double d_e = -dj[c] - alpha * dc[c];
        const ModulusGradient me = modulus_gradient(design.rho[c], design.eta[j][c], mat);
        g.rho[c] += d_e * me.d_rho;
        g.eta[j][c] += d_e * me.d_eta;
      }
    }
    ev.actuation.push_back(std::move(u));
    ev.connectivity.push_back(std::move(uc));
  }

  double r = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    r += regularization(design.rho[c], mat.rho_floor, 1.0, r_max);
    for (std::size_t j = 0; j < k; ++j) r += regularization(design.eta[j][c], 0.0, 1.0, r_max);
  }
  ev.breakdown.regularization = r;
  ev.breakdown.total = ev.breakdown.recomputed();
  if (with_gradient) {
    DesignGradient &g = *ev.gradient;
    for (std::size_t c = 0; c < n; ++c) {
      g.rho[c] += regularization_derivative(design.rho[c], mat.rho_floor, 1.0, r_max);
      for (std::size_t j = 0; j < k; ++j) {
        g.eta[j][c] += regularization_derivative(design.eta[j][c], 0.0, 1.0, r_max);
      }
    }
  }
  return ev;
}

double total_pose_error(const ProblemSpec &problem, const FeMesh &mesh,
                        const DesignVariables &design) {
  check_design(problem, design);
  const ElasticModel model(mesh, problem.material);
  const DirichletData act = dirichlet_conditions(mesh, problem.boundary, LoadCase::kActuation);
  std::vector<int> dofs;
  std::vector<double> values;
  double sum = 0.0;
  for (std::size_t j = 0; j < problem.num_states(); ++j) {
    const ConstrainedSolver solver(model.assemble(state_moduli(problem, design, j)), act.dofs);
    const StateSolution u = solver.solve(Eigen::VectorXd::Zero(model.num_dofs()), act.values);
    target_dofs(mesh, problem.boundary, j, dofs, values);
    sum += pose_error(u.u, dofs, values);
  }
  return sum;
}

// ---------------------------------------------------------------------------

MorphObjective::MorphObjective(ProblemSpec problem, std::vector<Point2> initial_sites)
    : problem_(std::move(problem)) {
  const std::size_t n = problem_.mesh.cells;
  if (initial_sites.empty()) {
    initial_sites = random_sites(problem_.domain, n, problem_.optimizer.seed);
  }
  if (initial_sites.size() != n) throw InvalidInput("initial sites must number mesh.n");
  SiteAnchor start{std::move(initial_sites), std::vector<double>(n, 0.0)};
  const std::vector<double> phi(n, 1.0);
  auto d = std::make_shared<Discretization>(discretize(problem_, phi, start));
  anchor_ = {d->diagram.sites, d->diagram.weights};
  current_ = std::move(d);
}

MorphObjective::MorphObjective(ProblemSpec problem, const PowerDiagram &diagram)
    : problem_(std::move(problem)), phase_(Phase::kFrozen) {
  if (diagram.size() != static_cast<std::size_t>(problem_.mesh.cells)) {
    throw InvalidInput("diagram size differs from mesh.n");
  }
  auto d = std::make_shared<Discretization>();
  d->diagram = diagram;
  d->mesh = extract_fe_mesh(diagram, problem_.boundary);
  anchor_ = {diagram.sites, diagram.weights};
  current_ = std::move(d);
}

Evaluation MorphObjective::evaluate(const DesignVariables &design, bool with_gradient) const {
  std::shared_ptr<const Discretization> disc = current_;
  if (phase_ == Phase::kAdaptive) {
    disc = std::make_shared<Discretization>(discretize(problem_, design.phi, anchor_));
  }
  Evaluation ev = evaluate_on_mesh(problem_, disc, design, r_max_, with_gradient);
  if (with_gradient) ev.gradient->phi = gradient(design, ev).phi;
  return ev;
}

DesignGradient MorphObjective::gradient(const DesignVariables &design, const Evaluation &e) const {
  DesignGradient g;
  if (e.gradient) {
    g.rho = e.gradient->rho;
    g.eta = e.gradient->eta;
  } else {
    g = *evaluate_on_mesh(problem_, e.discretization, design, r_max_, true).gradient;
  }
  if (phase_ == Phase::kAdaptive) {
    g.phi = phi_gradient(design, default_phi_step(design.phi));
  } else {
    g.phi.assign(design.phi.size(), 0.0);
  }
  return g;
}

double MorphObjective::default_phi_step(std::span<const double> phi) {
  const double mean = std::accumulate(phi.begin(), phi.end(), 0.0) / phi.size();
  return 1e-5 * mean;
}

std::vector<double> MorphObjective::phi_gradient(const DesignVariables &design,
                                                 double h) const {
  const std::size_t n = design.phi.size();
  std::vector<double> g(n, 0.0);
  if (n <= 1) return g;
  // A fixed number of site updates keeps every probe on the same smooth map.
  constexpr int steps = 3;
  auto probe = [&](std::size_t i, double delta) -> std::optional<double> {
    DesignVariables d = design;
    d.phi[i] += delta;
    try {
      auto disc = std::make_shared<Discretization>(discretize(problem_, d.phi, anchor_, steps));
      return evaluate_on_mesh(problem_, std::move(disc), d, r_max_, false).breakdown.total;
    } catch (const Error &) {
      return std::nullopt;
    }
  };
  std::optional<double> f0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto fp = probe(i, h);
    const auto fm = probe(i, -h);
    if (fp && fm) {
      g[i] = (*fp - *fm) / (2.0 * h);
      continue;
    }
    // One-sided fallback around the replayed base point.
    if (!f0) {
      f0 = probe(i, 0.0);
      if (!f0) throw NonConvergence("phi gradient: base probe failed", 0.0);
    }
    if (fp) g[i] = (*fp - *f0) / h;
    else if (fm) g[i] = (*f0 - *fm) / h;
  }
  return g;
}

void MorphObjective::accept(const Evaluation &e) {
  current_ = e.discretization;
  if (phase_ == Phase::kAdaptive) {
    anchor_ = {current_->diagram.sites, current_->diagram.weights};
  }
}

void MorphObjective::freeze() { phase_ = Phase::kFrozen; }

}  // namespace morph
