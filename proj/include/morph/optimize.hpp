#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "morph/objective.hpp"

namespace morph {

struct ConvergenceRow {
  int iteration = 0;  // counts across both phases
  int phase = 1;
  double objective = 0.0;
  std::vector<double> pose_errors;
  std::vector<double> compliances;
  double regularization = 0.0;
  double gradient_norm = 0.0;  // projected, inf-norm
};

struct ConnectivityReport {
  bool connected = false;  // fixed, actuated and every target in one solid component
  int components = 0;      // solid components
  bool fixed_reached = false;
  bool actuated_reached = false;
  bool targets_reached = false;
};

struct ThresholdChoice {
  double rho = 0.5;
  std::vector<double> eta;
  double sum_pose_error = 0.0;

  friend bool operator==(const ThresholdChoice &, const ThresholdChoice &) = default;
};

/// Candidate thresholds 0.05, 0.10, ..., 0.95.
std::vector<double> threshold_candidates();

/// Coordinate-wise grid search (two passes over the rho family and every
/// eta family) minimizing sum J of the projected design. Ties keep the
/// smallest threshold.
ThresholdChoice choose_threshold(const ProblemSpec &problem, const FeMesh &mesh,
                                 const DesignVariables &design);

/// Projects rho to {rho_floor, 1} and eta to {0, 1}; phi is kept.
DesignVariables project_design(const DesignVariables &design, const ThresholdChoice &t,
                               double rho_floor);

/// Flood fill over solid cells (rho == 1) through edges of positive length.
ConnectivityReport check_connectivity(std::span<const double> rho, const PowerDiagram &diagram,
                                      const FeMesh &mesh);

struct OptimizeOptions {
  // Start sites for the diagram; random from the seed when empty.
  std::vector<Point2> initial_sites;
  std::function<void(const ConvergenceRow &)> progress;
};

struct OptimizationResult {
  DesignVariables design;      // projected
  DesignVariables continuous;  // end of phase 2, before projection
  ThresholdChoice thresholds;
  std::shared_ptr<const Discretization> discretization;
  std::vector<StateSolution> states;  // actuation response of the projected design
  ObjectiveBreakdown breakdown;       // projected design, final r_max
  std::vector<ConvergenceRow> log;
  ConnectivityReport connectivity;
  double r_max = 0.0;
  double intermediate_phase1 = 0.0;
  double intermediate_phase2 = 0.0;
  int iterations_phase1 = 0;
  int iterations_phase2 = 0;
  bool converged_phase1 = false;
  bool converged_phase2 = false;
  // False only when both phases hit their iteration caps.
  bool converged = false;
};

/// Actuation response of one heating pattern on a fixed mesh.
StateSolution simulate_state(const ProblemSpec &problem, const FeMesh &mesh,
                             std::span<const double> rho, std::span<const double> eta);

OptimizationResult optimize(const ProblemSpec &problem, const OptimizeOptions &opts = {});

}  // namespace morph
