#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "innoprod/panel.hpp"

namespace innoprod {

// (gk_prev + investment) / depreciation; nullopt when depreciation <= 0.
std::optional<double> useful_life(double gk_prev, double investment, double depreciation);

struct CapitalOptions {
  // Use the period's own L_jt in the recursion instead of the firm average.
  bool per_period_life = false;
  // Drop firms whose series is flagged from the returned panel.
  bool exclude_flagged = true;
};

enum class CapitalStatus { kOk, kNonPositiveFactor, kUndefinedLife };
std::string_view to_string(CapitalStatus s);

struct CapitalSeries {
  std::string firm_id;
  std::vector<int> years;
  std::vector<double> capital;      // replacement value K
  std::vector<double> life;         // L_jt, NaN where not computable
  std::vector<bool> initialized;    // true where K was reset to book value
  double mean_life = kMissing;      // L-bar
  CapitalStatus status = CapitalStatus::kOk;
};

// Perpetual-inventory series for one firm's records (canonical order). The
// first wave, and any wave after a gap wider than `wave_spacing`, starts from
// book value. Subsequent waves follow
//   K_t = (K_{t-1} p_t / p_{t-1} + I_t) (1 - 2 / L-bar).
// Firms needing the recursion with L-bar <= 2 are flagged kNonPositiveFactor;
// firms needing it with no computable L_jt are flagged kUndefinedLife.
CapitalSeries pim_series(std::span<const FirmYear> records, int wave_spacing, const CapitalOptions& options = {});

struct CapitalResult {
  Panel panel;  // records with the capital column filled
  std::vector<CapitalSeries> series;
  std::vector<std::string> excluded_firms;
};

CapitalResult build_capital(const Panel& panel, const CapitalOptions& options = {});

csv::Table capital_series_table(const std::vector<CapitalSeries>& series);

}  // namespace innoprod
