#include "innoprod/linalg.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "innoprod/error.hpp"

namespace innoprod {

namespace {

VectorXd column_scale(const MatrixXd& X) {
  VectorXd s = X.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < s.size(); ++j) s(j) = s(j) > 0 ? 1.0 / s(j) : 0.0;
  return s;
}

MatrixXd normalized_gram(const MatrixXd& X, const VectorXd& s) {
  MatrixXd gram = MatrixXd::Zero(X.cols(), X.cols());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  return s.asDiagonal() * gram * s.asDiagonal();
}

std::vector<std::size_t> dependent_in_gram(const MatrixXd& gram, double tol) {
  // Greedy pivoted Cholesky: a column is dependent when its residual variance
  // after projecting on the accepted columns falls below tol.
  const Eigen::Index p = gram.cols();
  std::vector<std::size_t> dependent;
  std::vector<bool> done(p, false);
  MatrixXd L = MatrixXd::Zero(p, p);
  VectorXd diag = gram.diagonal();
  std::vector<Eigen::Index> order;
  for (Eigen::Index step = 0; step < p; ++step) {
    Eigen::Index best = -1;
    for (Eigen::Index j = 0; j < p; ++j) {
      if (!done[j] && (best < 0 || diag(j) > diag(best))) best = j;
    }
    if (diag(best) <= tol) {
      for (Eigen::Index j = 0; j < p; ++j) {
        if (!done[j]) dependent.push_back(static_cast<std::size_t>(j));
      }
      break;
    }
    done[best] = true;
    const double piv = std::sqrt(diag(best));
    const Eigen::Index k = static_cast<Eigen::Index>(order.size());
    for (Eigen::Index j = 0; j < p; ++j) {
      if (done[j] && j != best) continue;
      double v = gram(j, best);
      for (Eigen::Index m = 0; m < k; ++m) v -= L(j, m) * L(best, m);
      L(j, k) = v / piv;
      if (j != best) diag(j) -= L(j, k) * L(j, k);
    }
    order.push_back(best);
  }
  std::sort(dependent.begin(), dependent.end());
  return dependent;
}

}  // namespace

std::vector<std::size_t> dependent_columns(const MatrixXd& X, double tol) {
  return dependent_in_gram(normalized_gram(X, column_scale(X)), tol);
}

LinearFit least_squares(const MatrixXd& X, const VectorXd& y, const std::vector<std::string>& names) {
  if (X.rows() < X.cols()) {
    throw InsufficientDataError(
        fmt::format("{} observations for {} parameters", X.rows(), X.cols()));
  }
  const VectorXd s = column_scale(X);
  const MatrixXd gram = normalized_gram(X, s);
  const auto dep = dependent_in_gram(gram, 1e-11);
  if (!dep.empty()) {
    std::vector<std::string> dropped;
    for (auto j : dep) dropped.push_back(j < names.size() ? names[j] : fmt::format("col{}", j));
    throw CollinearityError(
        fmt::format("rank-deficient design; dependent terms: {}", fmt::join(dropped, ", ")), dropped);
  }
  // Normal equations on the scaled Gram with two refinement sweeps.
  Eigen::LDLT<MatrixXd> ldlt(gram);
  LinearFit fit;
  VectorXd b = ldlt.solve(s.asDiagonal() * (X.transpose() * y));
  fit.residual = y - X * (s.asDiagonal() * b);
  for (int sweep = 0; sweep < 2; ++sweep) {
    b += ldlt.solve(s.asDiagonal() * (X.transpose() * fit.residual));
    fit.residual = y - X * (s.asDiagonal() * b);
  }
  fit.coef = s.asDiagonal() * b;
  fit.fitted = y - fit.residual;
  fit.ssr = fit.residual.squaredNorm();
  const double tss = (y.array() - y.mean()).square().sum();
  fit.r2 = tss > 0 ? 1.0 - fit.ssr / tss : 1.0;
  return fit;
}

bool is_psd(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  return es.eigenvalues().minCoeff() >= -tol * scale;
}

MatrixXd sample_covariance(const MatrixXd& draws) {
  const Eigen::Index n = draws.rows();
  if (n < 2) return MatrixXd::Zero(draws.cols(), draws.cols());
  const MatrixXd centered = draws.rowwise() - draws.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(n - 1);
}

}  // namespace innoprod
