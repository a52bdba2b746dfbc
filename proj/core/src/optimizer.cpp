#include "innoprod/optimizer.hpp"

#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace innoprod {

namespace {

struct Callback {
  const Objective* f;
};

double trampoline(const gsl_vector* v, void* params) {
  auto* cb = static_cast<Callback*>(params);
  VectorXd x(static_cast<Eigen::Index>(v->size));
  for (std::size_t i = 0; i < v->size; ++i) x(static_cast<Eigen::Index>(i)) = gsl_vector_get(v, i);
  const double value = (*cb->f)(x);
  return std::isfinite(value) ? value : std::numeric_limits<double>::max();
}

}  // namespace

OptimizeResult nelder_mead(const Objective& f, const VectorXd& x0, const OptimizerOptions& options) {
  const std::size_t n = static_cast<std::size_t>(x0.size());
  Callback cb{&f};
  gsl_multimin_function fn{&trampoline, n, &cb};
  gsl_vector* x = gsl_vector_alloc(n);
  gsl_vector* step = gsl_vector_alloc(n);
  for (std::size_t i = 0; i < n; ++i) {
    gsl_vector_set(x, i, x0(static_cast<Eigen::Index>(i)));
    gsl_vector_set(step, i, options.initial_step);
  }
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n);
  gsl_multimin_fminimizer_set(s, &fn, x, step);

  OptimizeResult out;
  std::deque<double> history;
  const std::size_t window = 5 * n + 10;
  for (out.iterations = 0; out.iterations < options.max_iterations; ++out.iterations) {
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    history.push_back(s->fval);
    if (history.size() > window) history.pop_front();
    const double size = gsl_multimin_fminimizer_size(s);
    if (history.size() == window && std::abs(history.front() - history.back()) < options.tolerance &&
        size < 1e-4) {
      out.converged = true;
      ++out.iterations;
      break;
    }
  }
  out.x.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.x(static_cast<Eigen::Index>(i)) = gsl_vector_get(s->x, i);
  out.objective = s->fval;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(x);
  gsl_vector_free(step);
  return out;
}

MatrixXd numeric_jacobian(const ResidualFunction& r, const VectorXd& x) {
  const VectorXd r0 = r(x);
  MatrixXd J(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
    VectorXd xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    J.col(j) = (r(xp) - r(xm)) / (2 * h);
  }
  return J;
}

OptimizeResult levenberg_marquardt(const ResidualFunction& r, const VectorXd& x0, int max_iterations) {
  OptimizeResult out;
  out.x = x0;
  VectorXd res = r(out.x);
  double cost = res.squaredNorm();
  double lambda = 1e-6;
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    const MatrixXd J = numeric_jacobian(r, out.x);
    const MatrixXd JtJ = J.transpose() * J;
    const VectorXd g = J.transpose() * res;
    bool improved = false;
    for (int attempt = 0; attempt < 12; ++attempt) {
      MatrixXd A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const VectorXd delta = A.ldlt().solve(-g);
      const VectorXd candidate = out.x + delta;
      const VectorXd cres = r(candidate);
      const double ccost = cres.squaredNorm();
      if (std::isfinite(ccost) && ccost < cost) {
        const double drop = cost - ccost;
        out.x = candidate;
        res = cres;
        cost = ccost;
        lambda = std::max(lambda / 10, 1e-12);
        improved = true;
        if (drop <= 1e-14 * cost || delta.norm() <= 1e-12 * (1 + out.x.norm())) out.converged = true;
        break;
      }
      lambda *= 10;
    }
    if (!improved || out.converged || cost < 1e-30) {
      out.converged = true;
      break;
    }
  }
  out.objective = cost;
  return out;
}

}  // namespace innoprod
