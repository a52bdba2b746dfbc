#include <algorithm>
#include <cmath>

#include "innoprod/error.hpp"
#include "innoprod/prodfn.hpp"
#include "prodfn_detail.hpp"

namespace innoprod {

// Stacked moment system in psi = (gamma, pi, theta):
//   h1 = F'(y - F gamma), h2 = G(w)' nu, h3 = Z' nu,
// with nu = phi - X theta - G(w) pi and w the lagged omega.
MatrixXd analytic_variance(const Panel& panel, const EstimationSpec& spec, const EstimationResult& result) {
  using detail::Design;
  const Design d = detail::build_design(panel, spec);
  const auto first = detail::fit_first(d);
  const detail::MomentModel model(d, first.phi, spec.g_degree);

  const Eigen::Index q = d.X.cols();
  const Eigen::Index off = result.coef.size() - q;
  if (off < 0) throw InferenceError("result does not match the estimation design");
  const VectorXd theta = result.coef.tail(q);
  const auto ev = model.evaluate(theta);

  const Eigen::Index nf = d.F.cols();
  const Eigen::Index ng = static_cast<Eigen::Index>(model.g_size());
  const Eigen::Index p = nf + ng + q;
  const std::size_t nl = d.lagged.size();

  VectorXd mask(nf);
  for (Eigen::Index c = 0; c < nf; ++c) mask(c) = d.phi_col[static_cast<std::size_t>(c)] ? 1.0 : 0.0;

  const VectorXd ws = (ev.w.array() - ev.w_mean) / ev.w_sd;
  MatrixXd dG;
  const MatrixXd G = model.g_design(ws, &dG);
  dG /= ev.w_sd;  // derivative wrt the raw lagged omega
  const VectorXd slope = dG * ev.pi;

  MatrixXd J = MatrixXd::Zero(p, p);
  J.topLeftCorner(nf, nf) = -d.F.transpose() * d.F;

  MatrixXd H = MatrixXd::Zero(p, static_cast<Eigen::Index>(d.n_clusters));
  const VectorXd e1 = d.y - d.F * first.gamma;
  for (std::size_t s = 0; s < d.rows.size(); ++s) {
    H.col(static_cast<Eigen::Index>(d.cluster[s])).head(nf) += d.F.row(s).transpose() * e1(s);
  }

  for (std::size_t j = 0; j < nl; ++j) {
    const std::size_t s = d.lagged[j];
    const auto l = static_cast<std::size_t>(d.lag[s]);
    const VectorXd sj = d.F.row(s).transpose().cwiseProduct(mask);
    const VectorXd sl = d.F.row(l).transpose().cwiseProduct(mask);
    const VectorXd gj = G.row(j).transpose();
    const VectorXd dgj = dG.row(j).transpose();
    const double nu = ev.nu(j);

    VectorXd dnu(p);
    dnu.head(nf) = sj - slope(j) * sl;
    dnu.segment(nf, ng) = -gj;
    dnu.tail(q) = -d.X.row(s).transpose() + slope(j) * d.X.row(l).transpose();

    // d w / d psi
    VectorXd dw = VectorXd::Zero(p);
    dw.head(nf) = sl;
    dw.tail(q) = -d.X.row(l).transpose();

    J.middleRows(nf, ng) += gj * dnu.transpose() + nu * dgj * dw.transpose();
    const VectorXd zj = d.Z.row(s).transpose();
    J.bottomRows(q) += zj * dnu.transpose();

    auto h = H.col(static_cast<Eigen::Index>(d.cluster[s]));
    h.segment(nf, ng) += gj * nu;
    h.tail(q) += zj * nu;
  }

  const MatrixXd S = H * H.transpose();
  Eigen::FullPivLU<MatrixXd> lu(J);
  if (!lu.isInvertible()) throw InferenceError("moment Jacobian is singular; analytic variance unavailable");
  const MatrixXd Jinv = lu.inverse();
  const MatrixXd V = Jinv * S * Jinv.transpose();

  // Map psi to the reported coefficients.
  MatrixXd A = MatrixXd::Zero(result.coef.size(), p);
  A.rightCols(q).bottomRows(q).setIdentity();
  if (off == 2) {
    const auto k = std::find(d.theta_names.begin(), d.theta_names.end(), "k") - d.theta_names.begin();
    const auto k0 = std::find(d.theta_names.begin(), d.theta_names.end(), "k0") - d.theta_names.begin();
    const auto r = std::find(d.theta_names.begin(), d.theta_names.end(), "r") - d.theta_names.begin();
    A(0, static_cast<Eigen::Index>(d.free_l[0])) = 1;
    A(0, nf + ng + k) = 1;
    A(0, nf + ng + r) = 1;
    A(1, static_cast<Eigen::Index>(d.free_l[1])) = 1;
    A(1, nf + ng + k0) = 1;
  }
  const MatrixXd out = A * V * A.transpose();
  return 0.5 * (out + out.transpose()).eval();
}

}  // namespace innoprod
