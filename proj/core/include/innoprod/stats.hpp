#pragma once

#include <span>

namespace innoprod {

double mean(std::span<const double> x);
// Unbiased (n - 1) sample variance.
double sample_variance(std::span<const double> x);
double sample_sd(std::span<const double> x);

struct WelchTest {
  double mean_a = 0;
  double mean_b = 0;
  double difference = 0;  // mean_a - mean_b
  double t = 0;
  double df = 0;
  double p_value = 1;  // two-sided
};

// Two-sample t-test with unequal variances and Welch-Satterthwaite degrees of
// freedom. Throws UndefinedTestError when a sample has fewer than two values or
// both samples have zero variance.
WelchTest welch_t_test(std::span<const double> a, std::span<const double> b);

struct WaldTest {
  double statistic = 0;
  double p_value = 1;
};

// C = (a - b)^2 / (var_a + var_b - 2 cov_ab) against chi-square(1). Throws
// UndefinedTestError when the variance of the difference is not positive.
WaldTest wald_equality(double a, double b, double var_a, double var_b, double cov_ab);

double chi2_upper_tail(double x, double df);
double normal_cdf(double z);
double normal_upper_tail(double z);
double normal_quantile(double p);
double student_t_two_sided(double t, double df);

// Significance marker at the 10/5/1% levels.
const char* stars(double p_value);

}  // namespace innoprod
