#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "innoprod/config.hpp"
#include "innoprod/linalg.hpp"
#include "innoprod/panel.hpp"
#include "innoprod/stats.hpp"

namespace innoprod {

enum class EstimatorKind { kAcf, kOp };
enum class SampleGroup { kAll, kEntrants, kIncumbents };
enum class Weighting { kIdentity, kTwoStep };
enum class VarianceMethod { kNone, kAnalytic, kBootstrap };

std::string_view to_string(EstimatorKind k);
std::string_view to_string(SampleGroup g);
std::string_view to_string(VarianceMethod v);
EstimatorKind parse_estimator(std::string_view s);
SampleGroup parse_group(std::string_view s);
VarianceMethod parse_variance(std::string_view s);

struct EstimationSpec {
  EstimatorKind estimator = EstimatorKind::kAcf;
  int phi_degree = 3;
  int g_degree = 3;
  bool spillovers = true;
  // Split the R&D elasticity by high/medium-high-tech manufacturing.
  bool hm_interaction = false;
  SampleGroup group = SampleGroup::kAll;
  int max_entrant_age = 8;
  bool time_dummies = true;
  bool industry_dummies = true;
  Weighting weighting = Weighting::kIdentity;
  int starts = 5;
  int nm_iterations = 400;  // simplex budget per start before the local polish
  double tolerance = 1e-8;
  int min_lagged = 30;
  VarianceMethod variance = VarianceMethod::kBootstrap;
  int bootstrap = 200;
  std::uint64_t seed = 1;
  // Warm start for the optimizer (used by bootstrap replicates).
  std::optional<VectorXd> start;

  // Throws ValidationError on out-of-range settings.
  void validate() const;
  static EstimationSpec from_config(const KeyValueConfig& cfg);
  KeyValueConfig to_config() const;
};

struct EstimationResult {
  EstimatorKind estimator = EstimatorKind::kAcf;
  SampleGroup group = SampleGroup::kAll;
  bool spillovers = true;

  // Reported elasticities in a fixed order; labels follow the table rows.
  std::vector<std::string> names;
  std::vector<std::string> labels;
  VectorXd coef;
  MatrixXd variance;
  VarianceMethod variance_method = VarianceMethod::kNone;
  std::size_t bootstrap_replicates = 0;
  std::size_t bootstrap_failed = 0;

  // Intercepts (normalised so that mean omega over the sample is zero).
  double intercept = 0;   // beta
  double intercept0 = 0;  // beta^0
  std::vector<std::string> dummy_names;
  VectorXd dummy_coef;
  std::vector<std::string> g_names;
  VectorXd g_coef;
  // Nuisance first-stage coefficients reported by the OP variant.
  std::vector<std::string> extra_names;
  VectorXd extra_coef;

  // Per estimation-sample row.
  std::vector<std::string> firm_id;
  std::vector<int> year;
  std::vector<double> omega;
  std::vector<double> phi;
  std::vector<double> residual;  // xi + epsilon, NaN without a lag
  std::vector<std::uint8_t> has_lag;

  // Mean of residual * instrument at the solution, one per instrument.
  VectorXd moments;
  std::vector<std::string> instrument_names;

  double objective = 0;
  int iterations = 0;
  bool converged = false;
  double first_stage_r2 = 0;
  std::size_t n_obs = 0;
  std::size_t n_firms = 0;
  std::size_t n_lagged = 0;
  std::size_t dropped_zero_investment = 0;
  double zero_investment_share = 0;

  std::optional<std::size_t> index_of(const std::string& name) const;
  double value(const std::string& name) const;  // throws LookupError
  double se(const std::string& name) const;
  double covariance(const std::string& a, const std::string& b) const;
};

struct FirstStageResult {
  std::vector<std::string> term_names;
  VectorXd coef;
  VectorXd fitted;
  VectorXd phi;       // fitted part that carries omega
  VectorXd residual;  // epsilon-hat
  double r2 = 0;
  std::vector<std::size_t> rows;  // panel indices of the sample
};

// Least-squares control-function first stage on the spec's sample.
FirstStageResult first_stage(const Panel& panel, const EstimationSpec& spec);

// Second-stage GMM for the ACF value-added estimator (no variance).
EstimationResult second_stage_gmm(const Panel& panel, const EstimationSpec& spec);
// Investment-proxy, revenue-outcome variant (no variance).
EstimationResult op_variant(const Panel& panel, const EstimationSpec& spec);

// Dispatches on spec.estimator and attaches the variance selected by
// spec.variance.
EstimationResult estimate(const Panel& panel, const EstimationSpec& spec);

// Cluster-robust sandwich variance of the two-step estimator.
MatrixXd analytic_variance(const Panel& panel, const EstimationSpec& spec, const EstimationResult& result);

struct BootstrapResult {
  MatrixXd variance;
  VectorXd se;
  std::size_t replicates = 0;
  std::size_t failed = 0;
  bool degenerate = false;  // B = 1
};

// Firm-cluster bootstrap. Replicate b uses seed_seq{seed, b}. Failed
// replicates are dropped; more than 20% failures throws InferenceError.
BootstrapResult bootstrap(const Panel& panel, const EstimationSpec& spec, const EstimationResult& base);

// Wald test of coef_a = coef_b within one result.
WaldTest wald_equality(const EstimationResult& result, const std::string& coef_a, const std::string& coef_b);
// Wald test of one coefficient across two independently estimated groups.
WaldTest wald_across(const EstimationResult& a, const EstimationResult& b, const std::string& coef);

enum class SplitKind { kEntrantIncumbent, kHighTech };

struct GroupSplitResult {
  SplitKind kind = SplitKind::kEntrantIncumbent;
  std::vector<std::string> group_labels;
  std::vector<EstimationResult> results;
  std::optional<WaldTest> test;  // on the R&D elasticity
  std::string notice;
};

GroupSplitResult group_split_estimation(const Panel& panel, const EstimationSpec& spec, SplitKind kind);

}  // namespace innoprod
