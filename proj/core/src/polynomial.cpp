#include "innoprod/polynomial.hpp"

#include <cmath>

#include "innoprod/error.hpp"

namespace innoprod {

namespace {

void enumerate(std::size_t var, int remaining, std::vector<int>& current, std::vector<std::vector<int>>& out) {
  if (var == current.size()) {
    if (remaining == 0) out.push_back(current);
    return;
  }
  for (int e = remaining; e >= 0; --e) {
    current[var] = e;
    enumerate(var + 1, remaining - e, current, out);
  }
  current[var] = 0;
}

}  // namespace

PolynomialBasis::PolynomialBasis(std::vector<std::string> variables, int degree)
    : variables_(std::move(variables)), degree_(degree) {
  if (degree < 1) throw ValidationError("polynomial degree must be >= 1");
  std::vector<int> current(variables_.size(), 0);
  for (int d = 0; d <= degree; ++d) enumerate(0, d, current, exponents_);
}

std::vector<std::string> PolynomialBasis::term_names(const std::string& prefix) const {
  std::vector<std::string> names;
  for (const auto& e : exponents_) {
    std::string name;
    for (std::size_t v = 0; v < e.size(); ++v) {
      if (e[v] == 0) continue;
      if (!name.empty()) name += "*";
      name += variables_[v];
      if (e[v] > 1) name += "^" + std::to_string(e[v]);
    }
    names.push_back(prefix + (name.empty() ? "1" : name));
  }
  return names;
}

MatrixXd PolynomialBasis::evaluate(const MatrixXd& data) const {
  if (static_cast<std::size_t>(data.cols()) != variables_.size()) {
    throw ValidationError("polynomial data has the wrong number of columns");
  }
  const Eigen::Index n = data.rows();
  std::vector<MatrixXd> powers(variables_.size());
  for (std::size_t v = 0; v < variables_.size(); ++v) {
    powers[v].resize(n, degree_ + 1);
    powers[v].col(0).setOnes();
    for (int d = 1; d <= degree_; ++d) powers[v].col(d) = powers[v].col(d - 1).cwiseProduct(data.col(v));
  }
  MatrixXd out(n, static_cast<Eigen::Index>(exponents_.size()));
  for (std::size_t t = 0; t < exponents_.size(); ++t) {
    auto col = out.col(static_cast<Eigen::Index>(t));
    col.setOnes();
    for (std::size_t v = 0; v < variables_.size(); ++v) {
      if (exponents_[t][v] > 0) col = col.cwiseProduct(powers[v].col(exponents_[t][v]));
    }
  }
  return out;
}

Standardizer Standardizer::fit(const MatrixXd& data) {
  Standardizer s;
  const double n = static_cast<double>(data.rows());
  s.center = data.colwise().mean().transpose();
  s.scale.resize(data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    const double var = n > 1 ? (data.col(j).array() - s.center(j)).square().sum() / (n - 1) : 0.0;
    s.scale(j) = var > 0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

MatrixXd Standardizer::apply(const MatrixXd& data) const {
  return (data.rowwise() - center.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace innoprod
