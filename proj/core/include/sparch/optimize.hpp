#pragma once

#include "sparch/types.hpp"

#include <functional>
#include <limits>
#include <vector>

namespace sparch {

/// Returns f(x); fills *gradient when it is non-null. +inf or NaN marks an infeasible point.
using Objective = std::function<double(const Vector& x, Vector* gradient)>;

struct OptimizeOptions {
  int max_iterations = 200;
  /// Convergence when the projected gradient's max-norm drops below this.
  double gradient_tolerance = 1e-6;
  double armijo = 1e-4;
  int max_backtracks = 60;
  /// Longest step (max-norm) tried on the first backtracking pass.
  double max_step = 2.0;
};

struct OptimizeResult {
  Vector x;
  double value = std::numeric_limits<double>::quiet_NaN();
  Vector gradient;
  double projected_gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  /// Objective value at the start and after every accepted step.
  std::vector<double> trace;
};

/// Projected BFGS with lower bounds (use -inf for free coordinates) and Armijo backtracking
/// along the projection arc. Active bounds are dropped from the quasi-Newton step.
OptimizeResult minimize_bfgs(const Objective& f, Vector x0, const Vector& lower, const OptimizeOptions& options = {});

/// Central differences with step h * max(1, |x_i|).
Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-6);

/// Symmetric central-difference Hessian.
Matrix numeric_hessian(const std::function<double(const Vector&)>& f, const Vector& x, double h = 1e-4);

}  // namespace sparch
