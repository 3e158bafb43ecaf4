#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "morph/problem.hpp"

namespace morph {

struct GradientCheckOptions {
  std::size_t cells = 6;
  std::uint64_t seed = 1;
  double r_max = 1.0;
  // Test hook: perturb the adjoint gradient before comparing.
  bool corrupt_gradient = false;
};

struct FamilyCheck {
  std::string family;  // "rho", "eta1", ...
  double max_relative_error = 0.0;
  std::size_t worst_index = 0;
  double adjoint_at_worst = 0.0;
  double fd_at_worst = 0.0;
};

struct GradientCheckReport {
  std::vector<FamilyCheck> families;
  double phi_richardson_ratio = 0.0;
  std::vector<double> phi_steps;  // h, h/2, h/4
  bool passed = false;
};

/// Rectangle fixed on its left edge, pushed on part of its bottom edge, with
/// one target per state on the right edge.
ProblemSpec random_problem(std::uint64_t seed, std::size_t states = 2);

/// Random design on the problem re-meshed with `cells` cells; compares the
/// adjoint rho/eta gradients with central differences on the fixed mesh and
/// runs a Richardson self-consistency check of the phi differences.
/// Passes when every family error is below 1e-5 and the ratio lies in
/// [3.5, 4.5].
GradientCheckReport gradient_check(const ProblemSpec &problem,
                                   const GradientCheckOptions &opts = {});

}  // namespace morph
