#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "morph/fe_mesh.hpp"
#include "morph/fem.hpp"
#include "morph/power_diagram.hpp"
#include "morph/problem.hpp"

namespace morph {

// rho: density per cell; eta[j]: heating of state j per cell (0 cold, 1 hot);
// phi: relative cell volume per cell.
struct DesignVariables {
  std::vector<double> rho;
  std::vector<std::vector<double>> eta;
  std::vector<double> phi;

  std::size_t num_cells() const { return rho.size(); }
  std::size_t num_states() const { return eta.size(); }
  friend bool operator==(const DesignVariables &, const DesignVariables &) = default;
};

/// phi = 1, rho = 0.5, eta = 0.5.
DesignVariables initial_design(std::size_t cells, std::size_t states);

struct ObjectiveBreakdown {
  std::vector<double> pose_errors;  // J_j, mm
  std::vector<double> compliances;  // C_j
  double regularization = 0.0;      // sum of R over rho and every eta
  double alpha = 1.0;
  double total = 0.0;               // F

  double sum_pose_error() const;
  double sum_compliance() const;
  /// sum J + alpha sum C + R, from the parts.
  double recomputed() const;
};

struct DesignGradient {
  std::vector<double> rho;
  std::vector<std::vector<double>> eta;
  std::vector<double> phi;
};

/// Quadratic bump: 0 at both bounds, r_max at the midpoint. Throws
/// InvalidInput unless hi > lo.
double regularization(double xi, double lo, double hi, double r_max);
double regularization_derivative(double xi, double lo, double hi, double r_max);

/// lo when xi <= threshold, hi otherwise.
double project(double xi, double threshold, double lo, double hi);
std::vector<double> project(std::span<const double> xi, double threshold, double lo,
                            double hi);

/// Fraction of densities farther than 0.1 from both bounds.
double intermediate_fraction(std::span<const double> rho, double lo, double hi);

// Power diagram and FE mesh for one value of phi.
struct Discretization {
  PowerDiagram diagram;
  FeMesh mesh;
  int site_updates = 0;
  bool converged = true;
};

// Sites and weights a phase-1 diagram solve starts from.
struct SiteAnchor {
  std::vector<Point2> sites;
  std::vector<double> weights;
};

/// Target volumes of phi: relative map followed by the [V_min, V_max] clamp.
std::vector<double> target_volumes(const ProblemSpec &problem, std::span<const double> phi);

/// Box for phi so that one cell alone spans [V_min, V_max] when the others
/// sit at phi = 1.
std::pair<double, double> phi_bounds(const ProblemSpec &problem);

/// Centroidal diagram for phi started from `anchor`, meshed and tagged.
/// With `fixed_steps`, exactly that many site updates are replayed.
Discretization discretize(const ProblemSpec &problem, std::span<const double> phi,
                          const SiteAnchor &anchor, std::optional<int> fixed_steps = {});

struct Evaluation {
  ObjectiveBreakdown breakdown;
  std::shared_ptr<const Discretization> discretization;
  std::vector<StateSolution> actuation;     // per state
  std::vector<StateSolution> connectivity;  // per state
  std::optional<DesignGradient> gradient;
};

/// Objective on a fixed mesh. With `with_gradient`, the rho and eta
/// gradients are computed by adjoints; phi entries are left empty.
Evaluation evaluate_on_mesh(const ProblemSpec &problem,
                            std::shared_ptr<const Discretization> disc,
                            const DesignVariables &design, double r_max,
                            bool with_gradient);

/// Sum of J_j only; used by the threshold search.
double total_pose_error(const ProblemSpec &problem, const FeMesh &mesh,
                        const DesignVariables &design);

enum class Phase { kAdaptive = 1, kFrozen = 2 };

// Objective of the two-phase optimization. In the adaptive phase every
// evaluation rebuilds the diagram from the anchor (the last accepted
// diagram); in the frozen phase the mesh is fixed.
class MorphObjective {
 public:
  /// Solves the centroidal diagram at phi = 1 from `initial_sites` (random
  /// sites from the problem seed when empty) and anchors there.
  explicit MorphObjective(ProblemSpec problem, std::vector<Point2> initial_sites = {});

  /// Frozen-phase objective on a given diagram.
  MorphObjective(ProblemSpec problem, const PowerDiagram &diagram);

  const ProblemSpec &problem() const { return problem_; }
  Phase phase() const { return phase_; }
  double r_max() const { return r_max_; }
  void set_r_max(double r) { r_max_ = r; }
  std::size_t num_cells() const { return problem_.mesh.cells; }
  std::size_t num_states() const { return problem_.num_states(); }

  /// Throws NonConvergence or SolverError when the design cannot be
  /// discretized or solved.
  Evaluation evaluate(const DesignVariables &design, bool with_gradient) const;

  /// Gradient at the design `e` was evaluated for: adjoints for rho and
  /// eta, finite differences for phi in the adaptive phase. The phi part
  /// assumes the objective is anchored on `e` (see accept).
  DesignGradient gradient(const DesignVariables &design, const Evaluation &e) const;

  /// Central differences of F in phi around `design` with step h (phase 1).
  /// Each probe runs three site updates from the anchor.
  std::vector<double> phi_gradient(const DesignVariables &design, double h) const;
  /// Default step: 1e-5 * mean(phi).
  static double default_phi_step(std::span<const double> phi);

  /// Re-anchor on an accepted evaluation.
  void accept(const Evaluation &e);
  /// Switch to the frozen phase on the anchored discretization.
  void freeze();

  const std::shared_ptr<const Discretization> &current() const { return current_; }
  const SiteAnchor &anchor() const { return anchor_; }

 private:
  ProblemSpec problem_;
  Phase phase_ = Phase::kAdaptive;
  double r_max_ = 0.0;
  SiteAnchor anchor_;
  std::shared_ptr<const Discretization> current_;
};

}  // namespace morph
