#pragma once

#include <string>
#include <vector>

#include "innoprod/linalg.hpp"

namespace innoprod {

// All monomials of total degree <= `degree` in the given variables, constant
// first, then by degree with lexicographic exponent order within a degree.
class PolynomialBasis {
 public:
  PolynomialBasis(std::vector<std::string> variables, int degree);

  std::size_t size() const { return exponents_.size(); }
  int degree() const { return degree_; }
  const std::vector<std::string>& variables() const { return variables_; }
  const std::vector<std::vector<int>>& exponents() const { return exponents_; }
  // "1", "l", "l^2*k", ...
  std::vector<std::string> term_names(const std::string& prefix = "") const;

  // data: one column per variable.
  MatrixXd evaluate(const MatrixXd& data) const;

 private:
  std::vector<std::string> variables_;
  int degree_;
  std::vector<std::vector<int>> exponents_;
};

// Column centring and scaling; zero-dispersion columns are only centred.
struct Standardizer {
  VectorXd center;
  VectorXd scale;
  static Standardizer fit(const MatrixXd& data);
  MatrixXd apply(const MatrixXd& data) const;
};

}  // namespace innoprod
