#include "innoprod/stats.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>

#include "innoprod/error.hpp"

namespace innoprod {

double mean(std::span<const double> x) {
  if (x.empty()) return std::nan("");
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return std::nan("");
  const double m = mean(x);
  double s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double sample_sd(std::span<const double> x) { return std::sqrt(sample_variance(x)); }

WelchTest welch_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw UndefinedTestError("Welch test needs at least two values per sample");
  WelchTest out;
  out.mean_a = mean(a);
  out.mean_b = mean(b);
  out.difference = out.mean_a - out.mean_b;
  const double va = sample_variance(a) / static_cast<double>(a.size());
  const double vb = sample_variance(b) / static_cast<double>(b.size());
  const double se2 = va + vb;
  if (!(se2 > 0)) throw UndefinedTestError("Welch test undefined: both samples have zero variance");
  out.t = out.difference / std::sqrt(se2);
  out.df = se2 * se2 /
           (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  out.p_value = student_t_two_sided(out.t, out.df);
  return out;
}

WaldTest wald_equality(double a, double b, double var_a, double var_b, double cov_ab) {
  const double v = var_a + var_b - 2.0 * cov_ab;
  if (!(v > 0) || !std::isfinite(v)) throw UndefinedTestError("variance of the coefficient difference is not positive");
  WaldTest out;
  out.statistic = (a - b) * (a - b) / v;
  out.p_value = chi2_upper_tail(out.statistic, 1.0);
  return out;
}

double chi2_upper_tail(double x, double df) { return x <= 0 ? 1.0 : gsl_cdf_chisq_Q(x, df); }
double normal_cdf(double z) { return gsl_cdf_ugaussian_P(z); }
double normal_upper_tail(double z) { return gsl_cdf_ugaussian_Q(z); }
double normal_quantile(double p) { return gsl_cdf_ugaussian_Pinv(p); }

double student_t_two_sided(double t, double df) {
  if (t == 0) return 1.0;
  return std::min(1.0, 2.0 * gsl_cdf_tdist_Q(std::abs(t), df));
}

const char* stars(double p_value) {
  if (!(p_value == p_value)) return "";
  if (p_value < 0.01) return "***";
  if (p_value < 0.05) return "**";
  if (p_value < 0.10) return "*";
  return "";
}

}  // namespace innoprod
