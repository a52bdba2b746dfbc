#pragma once

#include <string>
#include <vector>

#include "innoprod/prodfn.hpp"

namespace innoprod::detail {

// Everything the two stages need, extracted once from (panel, spec).
struct Design {
  EstimatorKind kind = EstimatorKind::kAcf;
  std::vector<std::size_t> rows;        // panel index per sample row
  std::vector<std::ptrdiff_t> lag;      // sample position of the lag, -1 if none
  std::vector<std::size_t> lagged;      // sample positions that have a lag
  std::vector<std::size_t> cluster;     // firm cluster per sample row
  std::size_t n_clusters = 0;
  std::size_t dropped_zero_investment = 0;
  std::size_t candidates = 0;

  VectorXd y;
  MatrixXd F;  // first-stage design
  std::vector<std::string> F_names;
  std::vector<std::uint8_t> phi_col;    // 1 when the column belongs to phi
  std::vector<std::size_t> free_l;      // OP: l columns (regime 1, regime 0)
  std::vector<std::size_t> free_m;      // OP: log(M/L) columns

  MatrixXd X;  // second-stage regressors (one column per theta)
  std::vector<std::string> theta_names;
  MatrixXd Z;  // instruments, scaled to unit dispersion on the lagged rows
  std::vector<std::string> z_names;

  // g(.) controls, indexed by position in `lagged`.
  VectorXd pd, pc;
  bool use_pd = true, use_pc = true, use_pdpc = true;
  std::vector<int> g_year, g_ind;  // -1 = reference level
  std::vector<std::string> g_year_names, g_ind_names;

  // Full-sample dummies used for the reported time / industry effects.
  std::vector<int> year_idx, ind_idx;
  std::vector<std::string> year_names, ind_names;
};

Design build_design(const Panel& panel, const EstimationSpec& spec);

struct FirstFit {
  VectorXd gamma, fitted, phi, residual;
  double r2 = 0;
};
FirstFit fit_first(const Design& d);

// Concentrated second-stage moments for a candidate theta.
class MomentModel {
 public:
  MomentModel(const Design& d, VectorXd phi, int g_degree);

  struct Eval {
    VectorXd omega;   // all sample rows
    VectorXd nu;      // lagged rows
    VectorXd pi;      // g coefficients on the standardised design
    VectorXd w;       // omega lag, lagged rows
    double w_mean = 0, w_sd = 1;
  };
  Eval evaluate(const VectorXd& theta) const;
  VectorXd moments(const VectorXd& theta) const;  // Z' nu / n_lagged

  // g design for lagged rows given standardised w; optional derivative wrt w.
  MatrixXd g_design(const VectorXd& w_std, MatrixXd* dw = nullptr) const;
  std::vector<std::string> g_names() const;
  std::size_t g_continuous() const;
  std::size_t g_size() const;
  const Design& design() const { return d_; }
  const VectorXd& phi() const { return phi_; }
  int g_degree() const { return g_degree_; }

 private:
  const Design& d_;
  VectorXd phi_;
  int g_degree_;
  MatrixXd dd_;  // constant dummy block of the Gram
};

}  // namespace innoprod::detail
