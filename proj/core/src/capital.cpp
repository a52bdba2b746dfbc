#include "innoprod/capital.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <cmath>

#include "innoprod/error.hpp"

namespace innoprod {

std::optional<double> useful_life(double gk_prev, double investment, double depreciation) {
  if (!(depreciation > 0)) return std::nullopt;
  return (gk_prev + investment) / depreciation;
}

std::string_view to_string(CapitalStatus s) {
  switch (s) {
    case CapitalStatus::kOk: return "ok";
    case CapitalStatus::kNonPositiveFactor: return "nonpositive_depreciation_factor";
    case CapitalStatus::kUndefinedLife: return "undefined_useful_life";
  }
  return "ok";
}

CapitalSeries pim_series(std::span<const FirmYear> records, int wave_spacing, const CapitalOptions& options) {
  CapitalSeries s;
  if (records.empty()) return s;
  s.firm_id = records.front().firm_id;
  const std::size_t n = records.size();
  s.years.resize(n);
  s.capital.assign(n, kMissing);
  s.life.assign(n, kMissing);
  s.initialized.assign(n, false);

  for (std::size_t t = 0; t < n; ++t) {
    const auto& r = records[t];
    if (r.firm_id != s.firm_id) throw IntegrityError("pim_series given records of more than one firm");
    s.years[t] = r.year;
    s.initialized[t] = t == 0 || r.year - records[t - 1].year > wave_spacing;
    if (t > 0 && r.year <= records[t - 1].year) {
      throw IntegrityError(fmt::format("firm {}: years not strictly increasing", s.firm_id));
    }
    if (!s.initialized[t]) {
      if (auto l = useful_life(records[t - 1].capital_book, r.investment, r.depreciation)) s.life[t] = *l;
    }
  }

  double sum = 0;
  int count = 0;
  for (double l : s.life) {
    if (l == l) {
      sum += l;
      ++count;
    }
  }
  if (count > 0) s.mean_life = sum / count;

  bool needs_recursion = false;
  for (std::size_t t = 0; t < n; ++t) needs_recursion = needs_recursion || !s.initialized[t];
  if (needs_recursion) {
    if (count == 0) {
      s.status = CapitalStatus::kUndefinedLife;
    } else if (!(s.mean_life > 2.0)) {
      s.status = CapitalStatus::kNonPositiveFactor;
    }
  }

  for (std::size_t t = 0; t < n; ++t) {
    const auto& r = records[t];
    if (s.initialized[t]) {
      s.capital[t] = r.capital_book;
      continue;
    }
    if (s.status != CapitalStatus::kOk) continue;
    double life = s.mean_life;
    if (options.per_period_life && s.life[t] == s.life[t]) life = s.life[t];
    const double factor = 1.0 - 2.0 / life;
    const double prev = s.capital[t - 1];
    s.capital[t] = (prev * r.deflator / records[t - 1].deflator + r.investment) * factor;
  }
  return s;
}

CapitalResult build_capital(const Panel& panel, const CapitalOptions& options) {
  CapitalResult out;
  std::vector<FirmYear> records;
  records.reserve(panel.size());
  for (const auto& firm : panel.firms()) {
    auto recs = panel.firm_records(firm);
    auto s = pim_series(recs, panel.wave_spacing(), options);
    const bool flagged = s.status != CapitalStatus::kOk;
    if (flagged) {
      out.excluded_firms.push_back(firm.firm_id);
      spdlog::warn("firm {}: capital series flagged ({})", firm.firm_id, to_string(s.status));
    }
    if (!(flagged && options.exclude_flagged)) {
      for (std::size_t t = 0; t < recs.size(); ++t) {
        FirmYear r = recs[t];
        r.capital = s.capital[t];
        records.push_back(std::move(r));
      }
    }
    out.series.push_back(std::move(s));
  }
  out.panel = panel.with_records(std::move(records));
  return out;
}

csv::Table capital_series_table(const std::vector<CapitalSeries>& series) {
  csv::Table t{{"firm_id", "year", "capital", "useful_life", "mean_useful_life", "initialized", "status"}, {}};
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.years.size(); ++i) {
      t.rows.push_back({s.firm_id, std::to_string(s.years[i]), csv::format_double(s.capital[i]),
                        csv::format_double(s.life[i]), csv::format_double(s.mean_life),
                        s.initialized[i] ? "1" : "0", std::string(to_string(s.status))});
    }
  }
  return t;
}

}  // namespace innoprod
