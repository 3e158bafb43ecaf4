#pragma once

#include <functional>
#include <optional>

#include <Eigen/Dense>

namespace morph {

struct BoxLbfgsOptions {
  int max_iterations = 300;
  double gradient_tolerance = 1e-6;  // on the projected gradient, inf-norm
  int memory = 8;
  int max_line_search = 20;
  double armijo = 1e-4;
  // Largest change of any variable on a steepest-descent step.
  double initial_step = 0.1;
};

// value(x) returns nullopt when x cannot be evaluated (the trial point is
// rejected). gradient(x) is only asked for at the point of the latest
// successful value() call.
struct BoxObjective {
  std::function<std::optional<double>(const Eigen::VectorXd &x)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd &x)> gradient;
};

struct BoxLbfgsIterate {
  int iteration = 0;
  double f = 0.0;
  double projected_gradient = 0.0;  // inf-norm
  const Eigen::VectorXd *x = nullptr;
};

struct BoxLbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double projected_gradient = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// inf-norm of P(x - g) - x.
double projected_gradient_norm(const Eigen::VectorXd &x, const Eigen::VectorXd &g,
                               const Eigen::VectorXd &lo, const Eigen::VectorXd &hi);

/// Projected limited-memory BFGS for lo <= x <= hi. Variables held at a
/// bound by the gradient are frozen for the step; the rest follow the
/// two-loop direction, with a backtracking Armijo search along the projected
/// path. `on_iterate` sees the start point (iteration 0) and every accepted
/// point. Throws InvalidInput when the start point cannot be evaluated.
BoxLbfgsResult minimize_box_lbfgs(const BoxObjective &f, Eigen::VectorXd x0,
                                  const Eigen::VectorXd &lo, const Eigen::VectorXd &hi,
                                  const BoxLbfgsOptions &opts = {},
                                  const std::function<void(const BoxLbfgsIterate &)> &on_iterate = {});

}  // namespace morph
