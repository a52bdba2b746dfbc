#pragma once

#include <functional>

#include "innoprod/linalg.hpp"

namespace innoprod {

struct OptimizerOptions {
  int max_iterations = 2000;
  double tolerance = 1e-8;   // change in objective treated as converged
  double initial_step = 0.05;
};

struct OptimizeResult {
  VectorXd x;
  double objective = 0;
  int iterations = 0;
  bool converged = false;
};

using Objective = std::function<double(const VectorXd&)>;
using ResidualFunction = std::function<VectorXd(const VectorXd&)>;

// GSL nmsimplex2. Converged when the objective over the last stretch of
// iterations moved by less than `tolerance` and the simplex has collapsed.
OptimizeResult nelder_mead(const Objective& f, const VectorXd& x0, const OptimizerOptions& options);

// Levenberg-Marquardt on 0.5 * |r(x)|^2 with a central-difference Jacobian.
OptimizeResult levenberg_marquardt(const ResidualFunction& r, const VectorXd& x0, int max_iterations = 100);

// Central-difference Jacobian of r at x.
MatrixXd numeric_jacobian(const ResidualFunction& r, const VectorXd& x);

}  // namespace innoprod
