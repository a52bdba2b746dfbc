#pragma once

#include <optional>
#include <string>
#include <vector>

#include "innoprod/csv.hpp"
#include "innoprod/prodfn.hpp"
#include "innoprod/stats.hpp"
#include "innoprod/treatment.hpp"

namespace innoprod {

struct ReportCell {
  std::optional<double> value;
  std::optional<double> se;       // printed in parentheses below the value
  std::optional<double> p_value;  // drives the significance stars
  int precision = 3;
};

struct ReportRow {
  std::string label;
  std::vector<ReportCell> cells;
};

struct ReportTable {
  std::string title;
  std::vector<std::string> columns;
  std::vector<ReportRow> rows;
  std::vector<std::string> notes;
};

// Estimation results side by side; `test` rows hold the Wald statistic and
// its p-value per column when present.
ReportTable production_table(const std::string& title, const std::vector<std::string>& columns,
                             const std::vector<const EstimationResult*>& results,
                             const std::vector<std::optional<WaldTest>>& tests = {},
                             const std::string& test_label = "Test of equality");

// Four effects per column plus the complementarity gap.
ReportTable ate_table(const std::string& title, const std::vector<std::string>& columns,
                      const std::vector<const FourEffects*>& effects,
                      const std::vector<std::optional<ComplementarityTest>>& tests = {});

// Value cell text: fixed precision with stars; SE text: "(0.012)".
std::string format_value(const ReportCell& cell);
std::string format_se(const ReportCell& cell);

std::string render_text(const ReportTable& table);
// Long format: row, column, value, se, stars; cells carry the text rendering.
csv::Table report_csv(const ReportTable& table);

}  // namespace innoprod
