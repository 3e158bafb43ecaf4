#include "morph/optimize.hpp"

#include <cmath>
#include <limits>

#include "morph/errors.hpp"
#include "morph/lbfgs.hpp"

namespace morph {

std::vector<double> threshold_candidates() {
  std::vector<double> c;
  for (int i = 1; i <= 19; ++i) c.push_back(0.05 * i);
  return c;
}

DesignVariables project_design(const DesignVariables &design, const ThresholdChoice &t,
                               double rho_floor) {
  DesignVariables out = design;
  out.rho = project(design.rho, t.rho, rho_floor, 1.0);
  for (std::size_t j = 0; j < design.eta.size(); ++j) {
    out.eta[j] = project(design.eta[j], t.eta.at(j), 0.0, 1.0);
  }
  return out;
}

ThresholdChoice choose_threshold(const ProblemSpec &problem, const FeMesh &mesh,
                                 const DesignVariables &design) {
  const std::size_t k = design.eta.size();
  ThresholdChoice t;
  t.eta.assign(k, 0.5);
  auto score = [&](const ThresholdChoice &c) {
    try {
      return total_pose_error(problem, mesh,
                              project_design(design, c, problem.material.rho_floor));
    } catch (const SolverError &) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const auto grid = threshold_candidates();
  t.sum_pose_error = score(t);
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t family = 0; family <= k; ++family) {
      double &slot = family == 0 ? t.rho : t.eta[family - 1];
      double best = std::numeric_limits<double>::infinity();
      double best_t = slot;
      for (double c : grid) {
        slot = c;
        const double s = score(t);
        if (s < best) {
          best = s;
          best_t = c;
        }
      }
      slot = best_t;
      t.sum_pose_error = best;
    }
  }
  return t;
}

ConnectivityReport check_connectivity(std::span<const double> rho, const PowerDiagram &diagram,
                                      const FeMesh &mesh) {
  const std::size_t n = diagram.size();
  const double tol = weld_tolerance(diagram.domain);
  std::vector<int> comp(n, -1);
  ConnectivityReport rep;
  for (std::size_t s = 0; s < n; ++s) {
    if (rho[s] != 1.0 || comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = rep.components;
    while (!stack.empty()) {
      const std::size_t c = stack.back();
      stack.pop_back();
      for (const CellNeighbor &nb : diagram.cells[c].neighbors) {
        if (nb.shared_length <= tol) continue;
        const auto j = static_cast<std::size_t>(nb.cell);
        if (rho[j] == 1.0 && comp[j] < 0) {
          comp[j] = rep.components;
          stack.push_back(j);
        }
      }
    }
    ++rep.components;
  }

  // Components touching each vertex, through the triangles around it.
  std::vector<std::vector<int>> vertex_comps(mesh.vertices.size());
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const int c = comp[mesh.tri_cell[t]];
    if (c < 0) continue;
    for (int v : mesh.triangles[t]) vertex_comps[v].push_back(c);
  }
  auto touches = [&](int component, std::span<const std::uint8_t> tags) {
    for (std::size_t v = 0; v < tags.size(); ++v) {
      if (!tags[v]) continue;
      for (int c : vertex_comps[v]) {
        if (c == component) return true;
      }
    }
    return false;
  };
  auto holds_targets = [&](int component) {
    for (const auto &state : mesh.target_nodes) {
      for (int v : state) {
        bool found = false;
        for (int c : vertex_comps[v]) found |= c == component;
        if (!found) return false;
      }
    }
    return true;
  };
  for (int c = 0; c < rep.components; ++c) {
    const bool f = touches(c, mesh.fixed);
    const bool a = touches(c, mesh.actuated);
    const bool t = holds_targets(c);
    rep.fixed_reached |= f;
    rep.actuated_reached |= a;
    rep.targets_reached |= t;
    if (f && a && t) rep.connected = true;
  }
  return rep;
}

StateSolution simulate_state(const ProblemSpec &problem, const FeMesh &mesh,
                             std::span<const double> rho, std::span<const double> eta) {
  const std::size_t n = mesh.num_cells();
  if (rho.size() != n) throw InvalidInput("rho has the wrong length");
  if (eta.size() != n) throw InvalidInput("eta has the wrong length");
  std::vector<double> e(n);
  for (std::size_t c = 0; c < n; ++c) e[c] = interpolate_modulus(rho[c], eta[c], problem.material);
  const ElasticModel model(mesh, problem.material);
  StateSolution s = solve_state(model.assemble(e), mesh, problem.boundary, LoadCase::kActuation);
  s.eta.assign(eta.begin(), eta.end());
  return s;
}

namespace {

// Flattened design variables: rho, eta row by row, then (phase 1) phi.
struct Layout {
  std::size_t n;
  std::size_t k;
  bool with_phi;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(n * (k + 1) + (with_phi ? n : 0));
  }

  Eigen::VectorXd pack(const std::vector<double> &rho, const std::vector<std::vector<double>> &eta,
                       const std::vector<double> &phi) const {
    Eigen::VectorXd x(size());
    Eigen::Index q = 0;
    for (double r : rho) x[q++] = r;
    for (const auto &row : eta) {
      for (double e : row) x[q++] = e;
    }
    if (with_phi) {
      for (double p : phi) x[q++] = p;
    }
    return x;
  }

  void unpack(const Eigen::VectorXd &x, DesignVariables &d) const {
    Eigen::Index q = 0;
    for (double &r : d.rho) r = x[q++];
    for (auto &row : d.eta) {
      for (double &e : row) e = x[q++];
    }
    if (with_phi) {
      for (double &p : d.phi) p = x[q++];
    }
  }
};

ConvergenceRow make_row(int iteration, int phase, const ObjectiveBreakdown &b, double g) {
  return {iteration, phase, b.total, b.pose_errors, b.compliances, b.regularization, g};
}

struct PhaseOutcome {
  DesignVariables design;
  Evaluation evaluation;
  int iterations = 0;
  bool converged = false;
};

PhaseOutcome run_phase(MorphObjective &obj, const DesignVariables &start, int phase,
                       int max_iterations, OptimizationResult &result,
                       const OptimizeOptions &opts) {
  const ProblemSpec &p = obj.problem();
  const Layout layout{obj.num_cells(), obj.num_states(), phase == 1};
  const auto [phi_lo, phi_hi] = phi_bounds(p);
  const DesignVariables pack_lo{
      std::vector<double>(layout.n, p.material.rho_floor),
      std::vector<std::vector<double>>(layout.k, std::vector<double>(layout.n, 0.0)),
      std::vector<double>(layout.n, phi_lo)};
  const DesignVariables pack_hi{
      std::vector<double>(layout.n, 1.0),
      std::vector<std::vector<double>>(layout.k, std::vector<double>(layout.n, 1.0)),
      std::vector<double>(layout.n, phi_hi)};
  const Eigen::VectorXd lo = layout.pack(pack_lo.rho, pack_lo.eta, pack_lo.phi);
  const Eigen::VectorXd hi = layout.pack(pack_hi.rho, pack_hi.eta, pack_hi.phi);

  std::optional<Evaluation> last;
  DesignVariables work = start;
  BoxObjective f;
  f.value = [&](const Eigen::VectorXd &x) -> std::optional<double> {
    layout.unpack(x, work);
    try {
      last = obj.evaluate(work, false);
      return last->breakdown.total;
    } catch (const NonConvergence &) {
      return std::nullopt;
    } catch (const InvalidGeometry &) {
      return std::nullopt;
    } catch (const MeshTaggingError &) {
      return std::nullopt;
    }
  };
  f.gradient = [&](const Eigen::VectorXd &x) {
    layout.unpack(x, work);
    obj.accept(*last);
    const DesignGradient g = obj.gradient(work, *last);
    return layout.pack(g.rho, g.eta, g.phi);
  };
  std::optional<Evaluation> accepted;
  const auto on_iterate = [&](const BoxLbfgsIterate &it) {
    accepted = last;
    ConvergenceRow row = make_row(static_cast<int>(result.log.size()), phase,
                                  last->breakdown, it.projected_gradient);
    if (opts.progress) opts.progress(row);
    result.log.push_back(std::move(row));
  };
  BoxLbfgsOptions lopts;
  lopts.max_iterations = max_iterations;
  const Eigen::VectorXd x0 = layout.pack(start.rho, start.eta, start.phi);
  const BoxLbfgsResult r = minimize_box_lbfgs(f, x0, lo, hi, lopts, on_iterate);

  PhaseOutcome out;
  out.design = start;
  layout.unpack(r.x, out.design);
  out.evaluation = std::move(*accepted);
  out.iterations = r.iterations;
  out.converged = r.converged;
  return out;
}

}  // namespace

OptimizationResult optimize(const ProblemSpec &problem, const OptimizeOptions &opts) {
  OptimizationResult result;
  MorphObjective obj(problem, opts.initial_sites);
  const std::size_t n = obj.num_cells();
  const std::size_t k = obj.num_states();

  PhaseOutcome p1 = run_phase(obj, initial_design(n, k), 1, problem.optimizer.max_iter_phase1,
                              result, opts);
  result.iterations_phase1 = p1.iterations;
  result.converged_phase1 = p1.converged;
  result.intermediate_phase1 =
      intermediate_fraction(p1.design.rho, problem.material.rho_floor, 1.0);

  const ObjectiveBreakdown &b1 = p1.evaluation.breakdown;
  result.r_max = problem.optimizer.beta_rmax * (b1.sum_pose_error() + b1.alpha * b1.sum_compliance()) /
                 static_cast<double>(n * k);
  obj.freeze();
  obj.set_r_max(result.r_max);

  PhaseOutcome p2 = run_phase(obj, p1.design, 2, problem.optimizer.max_iter_phase2, result, opts);
  result.iterations_phase2 = p2.iterations;
  result.converged_phase2 = p2.converged;
  result.intermediate_phase2 =
      intermediate_fraction(p2.design.rho, problem.material.rho_floor, 1.0);
  result.converged = result.converged_phase1 || result.converged_phase2;

  result.discretization = obj.current();
  const FeMesh &mesh = result.discretization->mesh;
  result.continuous = p2.design;
  result.thresholds = choose_threshold(problem, mesh, p2.design);
  result.design = project_design(p2.design, result.thresholds, problem.material.rho_floor);
  Evaluation fin = evaluate_on_mesh(problem, result.discretization, result.design, result.r_max,
                                    false);
  result.breakdown = fin.breakdown;
  result.states = std::move(fin.actuation);
  result.connectivity =
      check_connectivity(result.design.rho, result.discretization->diagram, mesh);
  return result;
}

}  // namespace morph
