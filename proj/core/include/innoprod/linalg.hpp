#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace innoprod {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct LinearFit {
  VectorXd coef;
  VectorXd fitted;
  VectorXd residual;
  double r2 = 0;
  double ssr = 0;
};

// Columns of X that are (numerically) linear combinations of earlier-pivoted
// columns, judged on the column-normalised Gram matrix.
std::vector<std::size_t> dependent_columns(const MatrixXd& X, double tol = 1e-11);

// Least squares with rank checking. Throws InsufficientDataError when there
// are fewer rows than columns and CollinearityError naming the dependent
// columns (from `names`) when X is rank deficient.
LinearFit least_squares(const MatrixXd& X, const VectorXd& y, const std::vector<std::string>& names);

// Symmetric positive semi-definite check up to a relative tolerance.
bool is_psd(const MatrixXd& m, double tol = 1e-9);

// Sample covariance of the rows of `draws` (n - 1 denominator).
MatrixXd sample_covariance(const MatrixXd& draws);

}  // namespace innoprod
