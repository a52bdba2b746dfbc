#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "innoprod/config.hpp"
#include "innoprod/panel.hpp"

namespace innoprod {

enum class DgpMode {
  kLeontief,     // value-added technology, materials proportional to output
  kCobbDouglas,  // gross output with flexible labour and materials, investment proxy
};

struct DgpConfig {
  DgpMode mode = DgpMode::kLeontief;
  int n_firms = 1000;
  int waves = 8;
  int first_year = 2004;
  int wave_spacing = 2;
  double entrant_share = 0.4;
  int n_counties = 15;

  // Production function, per-employee form.
  double intercept = 1.5;
  double d0_shift = -0.3;
  double beta_l = 0.416;
  double beta_l0 = 0.569;
  double beta_k = 0.30;
  double beta_k0 = 0.29;
  double beta_r = 0.05;
  double beta_r_entrant_shift = 0.0;
  double beta_r_hm_shift = 0.0;
  double e_intra = 0.022;
  double e_intra0 = 0.025;
  double e_inter = -0.009;
  double e_inter0 = 0.035;
  double beta_age = 0.003;
  double beta_north = 0.19;
  double industry_tfp_sigma = 0.4;  // industry productivity levels, outside omega
  double beta_m = 1.6;            // Leontief materials coefficient
  double cd_beta_m = 0.45;        // Cobb-Douglas materials elasticity
  double materials_share = 0.45;  // Cobb-Douglas mean M/Y

  // Productivity law.
  double rho = 0.7;
  double delta_d = 0.1;
  double delta_c = 0.05;
  double delta_dc = 0.0;
  double sigma_xi = 0.15;
  double sigma_eps = 0.1;

  // Participation and innovation propensities (logistic).
  double rnd_rate = 0.30;
  double innov_rate = 0.74;
  double rnd_omega_slope = 1.5;
  double innov_omega_slope = 1.0;
  double innov_rnd_slope = 1.0;
  double proc_offset = 0.0;

  // Input policies.
  double labor_const = 2.3;
  double labor_omega = 0.6;
  double labor_rho = 0.8;
  double labor_sigma = 0.25;
  double industry_sigma = 0.4;
  double capital_per_worker = 3.5;
  double invest_omega = 0.8;
  double invest_sigma = 0.2;
  double life_min = 6.0;
  double life_max = 20.0;
  double rnd_const = -1.0;
  double rnd_omega = 1.0;
  double rnd_sigma = 0.5;
  double invest_const = 1.0;  // Cobb-Douglas log investment intercept
  double invest_age = 0.005;
  double materials_sigma = 0.1;

  double deflator_drift = 0.02;
  double deflator_sigma = 0.01;

  std::uint64_t seed = 1;

  // Throws ValidationError.
  void validate() const;
  static DgpConfig from_config(const KeyValueConfig& cfg);
  KeyValueConfig to_config() const;
};

// Intercepts solved so that the stationary participation and innovation rates
// hit their targets, plus the constant that centres omega at zero.
struct DgpCalibration {
  double rnd_intercept = 0;
  double innov_intercept = 0;
  double omega_const = 0;
  double omega_sd = 0;
};

DgpCalibration calibrate(const DgpConfig& cfg);

struct GroundTruth {
  DgpConfig config;
  DgpCalibration calibration;
  // Coefficients under the estimator's names plus treatment effects
  // (delta, d10, d01, d11, gap).
  std::map<std::string, double> parameters;

  // Per row, canonical panel order.
  std::vector<std::string> firm_id;
  std::vector<int> year;
  std::vector<double> omega, xi, eps, g, log_q, effect;

  double value(const std::string& name) const;  // throws LookupError
};

struct Simulation {
  Panel panel;  // raw input-format records (no capital or spillover columns)
  std::shared_ptr<const CountyDistanceMatrix> distances;
  GroundTruth truth;
};

Simulation generate_panel(const DgpConfig& cfg);

// Sidecar files: <stem>.txt (key-value parameters) and <stem>_rows.csv.
void write_truth(const GroundTruth& truth, const std::string& stem);
GroundTruth read_truth(const std::string& stem);

}  // namespace innoprod
