#pragma once

#include <string>
#include <vector>

#include "innoprod/csv.hpp"
#include "innoprod/panel.hpp"
#include "innoprod/stats.hpp"

namespace innoprod {

struct DescriptiveRow {
  std::string label;
  std::size_t n_entrants = 0;
  std::size_t n_incumbents = 0;
  WelchTest test;
  bool defined = true;  // false when the Welch test could not be computed
};

// Entrant vs incumbent means with Welch tests, one row per variable. Logs of
// amounts that can be zero (investment, R&D) use the positive values only;
// external knowledge uses log(E + 1).
std::vector<DescriptiveRow> describe_groups(const Panel& panel, int max_age = 8);

std::string render_descriptive(const std::vector<DescriptiveRow>& rows);
csv::Table descriptive_table(const std::vector<DescriptiveRow>& rows);

}  // namespace innoprod
