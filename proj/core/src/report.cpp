#include "innoprod/report.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace innoprod {

std::string format_value(const ReportCell& cell) {
  if (!cell.value) return "";
  std::string s = fmt::format("{:.{}f}", *cell.value, cell.precision);
  if (cell.p_value) s += stars(*cell.p_value);
  return s;
}

std::string format_se(const ReportCell& cell) {
  if (!cell.se) return "";
  return fmt::format("({:.{}f})", *cell.se, cell.precision);
}

namespace {

ReportCell coef_cell(const EstimationResult& r, std::size_t i) {
  ReportCell c;
  const auto j = static_cast<Eigen::Index>(i);
  c.value = r.coef(j);
  if (r.variance.rows() == r.coef.size() && r.variance_method != VarianceMethod::kNone) {
    const double v = r.variance(j, j);
    c.se = std::sqrt(std::max(v, 0.0));
    if (*c.se > 0) c.p_value = 2.0 * normal_upper_tail(std::abs(*c.value) / *c.se);
  }
  return c;
}

ReportCell plain(double v, int precision) {
  ReportCell c;
  c.value = v;
  c.precision = precision;
  return c;
}

}  // namespace

ReportTable production_table(const std::string& title, const std::vector<std::string>& columns,
                             const std::vector<const EstimationResult*>& results,
                             const std::vector<std::optional<WaldTest>>& tests, const std::string& test_label) {
  ReportTable t;
  t.title = title;
  t.columns = columns;
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto* r : results) {
    for (std::size_t i = 0; i < r->names.size(); ++i) {
      const auto hit = std::find_if(order.begin(), order.end(), [&](const auto& p) { return p.first == r->names[i]; });
      if (hit == order.end()) order.emplace_back(r->names[i], r->labels[i]);
    }
  }
  for (const auto& [name, label] : order) {
    ReportRow row{label, {}};
    for (const auto* r : results) {
      const auto i = r->index_of(name);
      row.cells.push_back(i ? coef_cell(*r, *i) : ReportCell{});
    }
    t.rows.push_back(std::move(row));
  }
  for (std::size_t e = 0; e < results.front()->extra_names.size(); ++e) {
    ReportRow row{results.front()->extra_names[e], {}};
    for (const auto* r : results) {
      row.cells.push_back(e < r->extra_names.size() ? plain(r->extra_coef(static_cast<Eigen::Index>(e)), 3)
                                                     : ReportCell{});
    }
    t.rows.push_back(std::move(row));
  }
  ReportRow b{"Intercept (beta)", {}}, b0{"Intercept (beta0)", {}};
  for (const auto* r : results) {
    b.cells.push_back(plain(r->intercept, 3));
    b0.cells.push_back(plain(r->intercept0, 3));
  }
  t.rows.push_back(std::move(b));
  t.rows.push_back(std::move(b0));
  if (!tests.empty()) {
    ReportRow c{test_label + ": C", {}}, p{"Pr(chi2(1) > C)", {}};
    for (std::size_t i = 0; i < results.size(); ++i) {
      const bool has = i < tests.size() && tests[i];
      c.cells.push_back(has ? plain(tests[i]->statistic, 2) : ReportCell{});
      p.cells.push_back(has ? plain(tests[i]->p_value, 3) : ReportCell{});
    }
    t.rows.push_back(std::move(c));
    t.rows.push_back(std::move(p));
  }
  ReportRow nobs{"Observations", {}}, nfirm{"Firms", {}}, obj{"GMM objective", {}};
  for (const auto* r : results) {
    nobs.cells.push_back(plain(static_cast<double>(r->n_obs), 0));
    nfirm.cells.push_back(plain(static_cast<double>(r->n_firms), 0));
    ReportCell o;
    o.value = r->objective;
    o.precision = 10;
    obj.cells.push_back(o);
  }
  t.rows.push_back(std::move(nobs));
  t.rows.push_back(std::move(nfirm));
  t.rows.push_back(std::move(obj));
  const auto* first = results.front();
  std::string se_note = "Standard errors in parentheses";
  if (first->variance_method == VarianceMethod::kBootstrap) {
    se_note += fmt::format(" (firm-cluster bootstrap, {} replicates)", first->bootstrap_replicates);
  } else if (first->variance_method == VarianceMethod::kAnalytic) {
    se_note += " (analytic, firm-clustered)";
  }
  t.notes.push_back(se_note + ". Significance levels: * 10%, ** 5%, *** 1%.");
  t.notes.push_back(fmt::format("Estimator: {}.", first->estimator == EstimatorKind::kAcf ? "ACF" : "OP"));
  if (first->estimator == EstimatorKind::kOp) {
    t.notes.push_back(fmt::format("Rows dropped for zero investment: {} ({:.1f}%).", first->dropped_zero_investment,
                                  100.0 * first->zero_investment_share));
  }
  return t;
}

ReportTable ate_table(const std::string& title, const std::vector<std::string>& columns,
                      const std::vector<const FourEffects*>& effects,
                      const std::vector<std::optional<ComplementarityTest>>& tests) {
  ReportTable t;
  t.title = title;
  t.columns = columns;
  const std::vector<std::pair<std::string, const AteEstimate FourEffects::*>> rows{
      {"Delta: innovator vs non-innovator", &FourEffects::delta},
      {"Delta10: product only", &FourEffects::d10},
      {"Delta01: process only", &FourEffects::d01},
      {"Delta11: product and process", &FourEffects::d11},
  };
  for (const auto& [label, member] : rows) {
    ReportRow est{label, {}}, matches{"  No. of matches", {}}, pct{"  exp(ATE) - 1", {}}, mean{"  Mean of productivity", {}};
    for (const auto* e : effects) {
      const AteEstimate& a = e->*member;
      if (a.empty) {
        est.cells.emplace_back();
        matches.cells.emplace_back();
        pct.cells.emplace_back();
        mean.cells.emplace_back();
        continue;
      }
      ReportCell c;
      c.value = a.estimate;
      c.se = a.se;
      c.p_value = a.p_value;
      est.cells.push_back(c);
      matches.cells.push_back(plain(static_cast<double>(a.matches), 0));
      pct.cells.push_back(plain(a.percent(), 3));
      mean.cells.push_back(plain(a.mean_outcome, 3));
    }
    t.rows.push_back(std::move(est));
    t.rows.push_back(std::move(matches));
    t.rows.push_back(std::move(pct));
    t.rows.push_back(std::move(mean));
  }
  if (!tests.empty()) {
    ReportRow gap{"Delta11 - Delta10 - Delta01", {}}, p{"  Pr(Z > z), one-sided", {}};
    for (std::size_t i = 0; i < effects.size(); ++i) {
      if (i < tests.size() && tests[i]) {
        ReportCell c;
        c.value = tests[i]->gap;
        c.se = tests[i]->se;
        gap.cells.push_back(c);
        p.cells.push_back(plain(tests[i]->p_value, 3));
      } else {
        gap.cells.emplace_back();
        p.cells.emplace_back();
      }
    }
    t.rows.push_back(std::move(gap));
    t.rows.push_back(std::move(p));
  }
  t.notes.push_back("Nearest-neighbour matching on lagged covariates; standard errors in parentheses.");
  t.notes.push_back("Significance levels: * 10%, ** 5%, *** 1%.");
  return t;
}

std::string render_text(const ReportTable& table) {
  std::size_t label_width = 10;
  for (const auto& r : table.rows) label_width = std::max(label_width, r.label.size() + 2);
  std::size_t col_width = 14;
  for (const auto& c : table.columns) col_width = std::max(col_width, c.size() + 2);
  std::string out = table.title + "\n";
  const std::size_t total = label_width + col_width * table.columns.size();
  out += std::string(total, '-') + "\n";
  out += fmt::format("{:<{}}", "", label_width);
  for (const auto& c : table.columns) out += fmt::format("{:>{}}", c, col_width);
  out += "\n" + std::string(total, '-') + "\n";
  for (const auto& r : table.rows) {
    out += fmt::format("{:<{}}", r.label, label_width);
    bool any_se = false;
    for (const auto& c : r.cells) {
      out += fmt::format("{:>{}}", format_value(c), col_width);
      any_se = any_se || c.se.has_value();
    }
    out += "\n";
    if (any_se) {
      out += fmt::format("{:<{}}", "", label_width);
      for (const auto& c : r.cells) out += fmt::format("{:>{}}", format_se(c), col_width);
      out += "\n";
    }
  }
  out += std::string(total, '-') + "\n";
  for (const auto& n : table.notes) out += n + "\n";
  return out;
}

csv::Table report_csv(const ReportTable& table) {
  csv::Table t{{"row", "column", "value", "se", "stars"}, {}};
  for (const auto& r : table.rows) {
    for (std::size_t i = 0; i < r.cells.size() && i < table.columns.size(); ++i) {
      const auto& c = r.cells[i];
      if (!c.value) continue;
      std::string v = fmt::format("{:.{}f}", *c.value, c.precision);
      std::string se = c.se ? fmt::format("{:.{}f}", *c.se, c.precision) : "";
      t.rows.push_back({r.label, table.columns[i], v, se, c.p_value ? stars(*c.p_value) : ""});
    }
  }
  return t;
}

}  // namespace innoprod
