#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "innoprod/linalg.hpp"
#include "innoprod/panel.hpp"
#include "innoprod/prodfn.hpp"

namespace innoprod {

// Per panel row: omega from the estimation and residual TFP
// r_t = y_t - (parametric part of the production function).
struct ProductivitySeries {
  std::vector<double> omega;     // NaN where the row was outside the estimation sample
  std::vector<double> residual;  // NaN where a regressor is missing
  std::vector<std::uint8_t> has_lag;
  std::size_t excluded = 0;  // rows without a residual
};

ProductivitySeries residual_tfp(const Panel& panel, const EstimationResult& result);

enum class Treatment { kInnovator, kProductOnly, kProcessOnly, kBoth };
enum class ExactMatch { kYear, kYearIndustry };

std::string_view to_string(Treatment t);
std::string_view to_string(ExactMatch e);
ExactMatch parse_exact(std::string_view s);

struct MatchConfig {
  Treatment treatment = Treatment::kInnovator;
  ExactMatch exact = ExactMatch::kYearIndustry;
  int neighbors = 1;
  bool bias_correction = false;

  void validate() const;
};

// Names of the lagged matching covariates, in metric order.
const std::vector<std::string>& matching_covariates();

// Units eligible for matching: rows with a lagged wave, a residual and
// complete lagged covariates.
struct MatchSample {
  std::vector<std::size_t> rows;  // panel index, canonical order
  MatrixXd covariates;            // one row per unit
  VectorXd outcome;               // residual TFP at t
  std::vector<int> year;
  std::vector<std::string> industry;
  std::vector<std::uint8_t> prod, proc;
  std::size_t dropped = 0;

  std::size_t size() const { return rows.size(); }
};

MatchSample build_match_sample(const ProductivitySeries& series, const Panel& panel);

struct AteEstimate {
  std::string label;
  bool empty = false;  // no treated units for this effect
  double estimate = 0;
  double se = 0;
  double p_value = 1;  // two-sided normal
  std::size_t treated = 0;
  std::size_t controls = 0;
  std::size_t matches = 0;  // treated units with a control in their cell
  std::size_t unmatched_treated = 0;
  double mean_outcome = 0;  // mean residual TFP over the matched units

  double percent() const;  // exp(estimate) - 1
};

// Nearest-neighbour matching estimate of the average treatment effect.
// Throws NoOverlapError when no treated unit shares a cell with a control.
AteEstimate match_ate(const MatchSample& sample, const MatchConfig& cfg);
// Same with labels supplied directly: 1 treated, 0 control, -1 excluded.
AteEstimate match_ate(const MatchSample& sample, const std::vector<int>& label, const MatchConfig& cfg);
AteEstimate match_ate(const ProductivitySeries& series, const Panel& panel, const MatchConfig& cfg);

// Treatment labels (1/0/-1) for the sample under cfg.treatment.
std::vector<int> treatment_labels(const MatchSample& sample, Treatment t);

struct FourEffects {
  AteEstimate delta, d10, d01, d11;
};

// Delta uses base_cfg.exact; the three sub-effects match exactly on year.
FourEffects four_effects(const MatchSample& sample, const MatchConfig& base_cfg);

struct ComplementarityTest {
  double gap = 0;
  double se = 0;
  double z = 0;
  double p_value = 1;  // one-sided, H1: gap > 0
  bool complementary = false;
  std::vector<std::string> zeroed;  // effects set to zero by the convention
};

// gap = d11 - d10 - d01 with the variances summed. With zero_convention an
// empty or insignificant (two-sided, at alpha) effect counts as 0 with SE 0;
// without it an empty effect throws IncompleteInputsError.
ComplementarityTest complementarity_test(const AteEstimate& d10, const AteEstimate& d01, const AteEstimate& d11,
                                         bool zero_convention = false, double alpha = 0.05);

// ATEs after permuting labels within exact cells.
std::vector<double> placebo_ates(const MatchSample& sample, const MatchConfig& cfg, int permutations,
                                 std::uint64_t seed);

}  // namespace innoprod
