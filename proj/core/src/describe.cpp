#include "innoprod/describe.hpp"

#include <fmt/format.h>

#include <cmath>
#include <functional>
#include <optional>

#include "innoprod/error.hpp"

namespace innoprod {

namespace {

using Extractor = std::function<std::optional<double>(const FirmYear&)>;

std::optional<double> positive_log(double v) {
  if (!(v > 0)) return std::nullopt;
  return std::log(v);
}

std::optional<double> flag(bool b) { return b ? 1.0 : 0.0; }

}  // namespace

std::vector<DescriptiveRow> describe_groups(const Panel& panel, int max_age) {
  const auto cls = classify_entrant(panel, max_age);
  const std::vector<std::pair<std::string, Extractor>> vars{
      {"log(Value-Added Productivity)", [](const FirmYear& r) { return positive_log(r.value_added / r.employees); }},
      {"log(Gross Output Productivity)", [](const FirmYear& r) { return positive_log(r.revenue / r.employees); }},
      {"log(No. of Employees)", [](const FirmYear& r) { return positive_log(r.employees); }},
      {"log(Capital)",
       [](const FirmYear& r) { return positive_log(r.has_capital() ? r.capital : r.capital_book); }},
      {"log(Material Cost)", [](const FirmYear& r) { return positive_log(r.materials); }},
      {"log(Investment in Fixed Assets)", [](const FirmYear& r) { return positive_log(r.investment); }},
      {"log(R&D Expenditure)", [](const FirmYear& r) { return positive_log(r.rnd); }},
      {"Dummy for Positive R&D Expenditure", [](const FirmYear& r) { return flag(!r.d_zero_rnd); }},
      {"Dummy for Innovator", [](const FirmYear& r) { return flag(r.innovator); }},
      {"Dummy for Product Innovation", [](const FirmYear& r) { return flag(r.prod_innov); }},
      {"Dummy for Process Innovation", [](const FirmYear& r) { return flag(r.proc_innov); }},
      {"Dummy for North", [](const FirmYear& r) { return flag(r.north); }},
      {"log(Intra-Industry R&D)",
       [](const FirmYear& r) -> std::optional<double> {
         if (!(r.intra_rnd >= 0)) return std::nullopt;
         return std::log1p(r.intra_rnd);
       }},
      {"log(Inter-Industry R&D)",
       [](const FirmYear& r) -> std::optional<double> {
         if (!(r.inter_rnd >= 0)) return std::nullopt;
         return std::log1p(r.inter_rnd);
       }},
  };

  std::vector<DescriptiveRow> rows;
  for (const auto& [label, get] : vars) {
    std::vector<double> ent, inc;
    for (std::size_t i = 0; i < panel.size(); ++i) {
      auto v = get(panel[i]);
      if (!v || !std::isfinite(*v)) continue;
      (cls.entrant[i] ? ent : inc).push_back(*v);
    }
    DescriptiveRow row;
    row.label = label;
    row.n_entrants = ent.size();
    row.n_incumbents = inc.size();
    try {
      row.test = welch_t_test(ent, inc);
    } catch (const UndefinedTestError&) {
      row.defined = false;
      row.test.mean_a = mean(ent);
      row.test.mean_b = mean(inc);
      row.test.difference = row.test.mean_a - row.test.mean_b;
      row.test.p_value = std::nan("");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

std::string cell(double v, int precision) {
  if (!std::isfinite(v)) return "NA";
  return fmt::format("{:.{}f}", v, precision);
}

}  // namespace

std::string render_descriptive(const std::vector<DescriptiveRow>& rows) {
  std::string out = "Test of Equality of Means between Entrants and Incumbents\n";
  out += fmt::format("{:<36}{:>10}{:>12}{:>12}{:>14}\n", "", "Entrants", "Incumbents", "Difference", "Pr(|T|>|t|)");
  out += std::string(84, '-') + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{:<36}{:>10}{:>12}{:>12}{:>14}\n", r.label, cell(r.test.mean_a, 2), cell(r.test.mean_b, 2),
                       cell(r.test.difference, 2), cell(r.test.p_value, 3));
  }
  out += std::string(84, '-') + "\nWelch t-test with unequal variances on the estimation sample.\n";
  return out;
}

csv::Table descriptive_table(const std::vector<DescriptiveRow>& rows) {
  csv::Table t{{"variable", "n_entrants", "n_incumbents", "mean_entrants", "mean_incumbents", "difference", "t",
                "df", "p_value"},
               {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.label, std::to_string(r.n_entrants), std::to_string(r.n_incumbents), cell(r.test.mean_a, 2),
                      cell(r.test.mean_b, 2), cell(r.test.difference, 2), csv::format_double(r.test.t),
                      csv::format_double(r.test.df), cell(r.test.p_value, 3)});
  }
  return t;
}

}  // namespace innoprod
