#include "innoprod/treatment.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "innoprod/error.hpp"
#include "innoprod/parallel.hpp"
#include "innoprod/stats.hpp"

namespace innoprod {

namespace {

double regressor(const FirmYear& r, const std::string& name, bool levels) {
  const double l = std::log(r.employees);
  const double d0 = r.d_zero_rnd ? 1.0 : 0.0;
  const double k = std::log(r.capital) - (levels ? 0.0 : l);
  const double rr = r.d_zero_rnd ? 0.0 : std::log(r.rnd) - (levels ? 0.0 : l);
  const bool hm = is_high_or_medium_high(r.tech_class);
  if (name == "l_plus") return (1 - d0) * l;
  if (name == "l_plus0") return d0 * l;
  if (name == "k") return (1 - d0) * k;
  if (name == "k0") return d0 * k;
  if (name == "r") return (1 - d0) * rr;
  if (name == "r_hm") return (1 - d0) * (hm ? rr : 0.0);
  if (name == "r_other") return (1 - d0) * (hm ? 0.0 : rr);
  if (name == "d0_shift") return d0;
  if (name == "e_intra") return (1 - d0) * std::log1p(r.intra_rnd);
  if (name == "e_intra0") return d0 * std::log1p(r.intra_rnd);
  if (name == "e_inter") return (1 - d0) * std::log1p(r.inter_rnd);
  if (name == "e_inter0") return d0 * std::log1p(r.inter_rnd);
  if (name == "age") return r.age;
  if (name == "north") return r.north ? 1.0 : 0.0;
  throw LookupError("unknown production-function term " + name);
}

}  // namespace

ProductivitySeries residual_tfp(const Panel& panel, const EstimationResult& result) {
  const bool op = result.estimator == EstimatorKind::kOp;
  ProductivitySeries s;
  const std::size_t n = panel.size();
  s.omega.assign(n, std::nan(""));
  s.residual.assign(n, std::nan(""));
  s.has_lag.assign(n, 0);

  std::map<std::pair<std::string, int>, double> omega;
  for (std::size_t i = 0; i < result.omega.size(); ++i) omega[{result.firm_id[i], result.year[i]}] = result.omega[i];

  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = panel[i];
    s.has_lag[i] = panel.lag(i).has_value();
    if (auto it = omega.find({r.firm_id, r.year}); it != omega.end()) s.omega[i] = it->second;
    const double L = r.employees;
    double v = op ? std::log(r.revenue / L) : std::log(r.value_added / L);
    for (std::size_t c = 0; c < result.names.size(); ++c) {
      if (result.coef(static_cast<Eigen::Index>(c)) == 0.0) continue;
      v -= result.coef(static_cast<Eigen::Index>(c)) * regressor(r, result.names[c], false);
    }
    if (op && result.extra_coef.size() == 2) {
      const double lm = std::log(r.materials / L);
      v -= (r.d_zero_rnd ? result.extra_coef(1) : result.extra_coef(0)) * lm;
    }
    if (std::isfinite(v)) {
      s.residual[i] = v;
    } else {
      ++s.excluded;
    }
  }
  if (s.excluded > 0) spdlog::info("residual TFP undefined for {} rows (missing regressors)", s.excluded);
  return s;
}

std::string_view to_string(Treatment t) {
  switch (t) {
    case Treatment::kInnovator: return "delta";
    case Treatment::kProductOnly: return "d10";
    case Treatment::kProcessOnly: return "d01";
    case Treatment::kBoth: return "d11";
  }
  return "delta";
}

std::string_view to_string(ExactMatch e) { return e == ExactMatch::kYear ? "year" : "year+industry"; }

ExactMatch parse_exact(std::string_view s) {
  if (s == "year") return ExactMatch::kYear;
  if (s == "year+industry") return ExactMatch::kYearIndustry;
  throw ValidationError("unknown exact-match set '" + std::string(s) + "' (year, year+industry)");
}

void MatchConfig::validate() const {
  if (neighbors < 1) throw ValidationError("neighbors must be >= 1");
}

double AteEstimate::percent() const { return std::exp(estimate) - 1.0; }

const std::vector<std::string>& matching_covariates() {
  static const std::vector<std::string> names{
      "residual_tfp", "omega",    "prod_innov", "proc_innov",     "innovator",      "log_rnd_intensity", "positive_rnd",
      "log_va_per_l", "log_l",    "log_k",      "log_m",          "log_intra",      "log_inter",         "age"};
  return names;
}

MatchSample build_match_sample(const ProductivitySeries& series, const Panel& panel) {
  if (series.residual.size() != panel.size()) throw ValidationError("productivity series does not match the panel");
  const bool spill = panel.has_spillovers();
  if (!spill) spdlog::warn("panel has no spillover columns; knowledge covariates set to zero for matching");
  MatchSample m;
  std::vector<std::array<double, 14>> covs;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto lag = panel.lag(i);
    if (!lag) continue;
    const auto& r = panel[i];
    const auto& p = panel[*lag];
    const double L = p.employees;
    std::array<double, 14> x{series.residual[*lag],
                             series.omega[*lag],
                             p.prod_innov ? 1.0 : 0.0,
                             p.proc_innov ? 1.0 : 0.0,
                             (p.prod_innov || p.proc_innov) ? 1.0 : 0.0,
                             p.d_zero_rnd ? 0.0 : std::log(p.rnd / L),
                             p.d_zero_rnd ? 0.0 : 1.0,
                             std::log(p.value_added / L),
                             std::log(L),
                             std::log(p.capital),
                             std::log(p.materials),
                             spill ? std::log1p(p.intra_rnd) : 0.0,
                             spill ? std::log1p(p.inter_rnd) : 0.0,
                             static_cast<double>(p.age)};
    const bool ok = std::isfinite(series.residual[i]) &&
                    std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
    if (!ok) {
      ++m.dropped;
      continue;
    }
    m.rows.push_back(i);
    covs.push_back(x);
    m.outcome.conservativeResize(static_cast<Eigen::Index>(m.rows.size()));
    m.outcome(static_cast<Eigen::Index>(m.rows.size() - 1)) = series.residual[i];
    m.year.push_back(r.year);
    m.industry.push_back(r.industry);
    m.prod.push_back(r.prod_innov);
    m.proc.push_back(r.proc_innov);
  }
  m.covariates.resize(static_cast<Eigen::Index>(covs.size()), 14);
  for (std::size_t i = 0; i < covs.size(); ++i) {
    for (int c = 0; c < 14; ++c) m.covariates(static_cast<Eigen::Index>(i), c) = covs[i][static_cast<std::size_t>(c)];
  }
  if (m.outcome.size() != static_cast<Eigen::Index>(m.rows.size())) m.outcome.resize(0);
  return m;
}

std::vector<int> treatment_labels(const MatchSample& sample, Treatment t) {
  std::vector<int> label(sample.size(), -1);
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const bool pd = sample.prod[i], pc = sample.proc[i];
    if (!pd && !pc) {
      label[i] = 0;
      continue;
    }
    switch (t) {
      case Treatment::kInnovator: label[i] = 1; break;
      case Treatment::kProductOnly: label[i] = (pd && !pc) ? 1 : -1; break;
      case Treatment::kProcessOnly: label[i] = (!pd && pc) ? 1 : -1; break;
      case Treatment::kBoth: label[i] = (pd && pc) ? 1 : -1; break;
    }
  }
  return label;
}

namespace {

// Cells of the exact-match variables; units listed in sample order.
std::vector<std::vector<std::size_t>> exact_cells(const MatchSample& s, const std::vector<int>& label, ExactMatch e) {
  std::map<std::pair<int, std::string>, std::vector<std::size_t>> cells;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (label[i] < 0) continue;
    cells[{s.year[i], e == ExactMatch::kYearIndustry ? s.industry[i] : std::string()}].push_back(i);
  }
  std::vector<std::vector<std::size_t>> out;
  for (auto& [key, units] : cells) out.push_back(std::move(units));
  return out;
}

// Indices of the `count` nearest candidates to unit i; ties keep candidate order.
std::vector<std::size_t> nearest(const MatrixXd& xs, std::size_t i, const std::vector<std::size_t>& candidates,
                                 std::size_t count) {
  std::vector<std::pair<double, std::size_t>> d;
  d.reserve(candidates.size());
  for (std::size_t pos = 0; pos < candidates.size(); ++pos) {
    const std::size_t j = candidates[pos];
    if (j == i) continue;
    double s = 0;
    for (Eigen::Index c = 0; c < xs.cols(); ++c) {
      const double diff = xs(static_cast<Eigen::Index>(i), c) - xs(static_cast<Eigen::Index>(j), c);
      s += diff * diff;
    }
    d.emplace_back(s, pos);
  }
  count = std::min(count, d.size());
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(count), d.end());
  std::vector<std::size_t> out(count);
  for (std::size_t a = 0; a < count; ++a) out[a] = candidates[d[a].second];
  return out;
}

VectorXd group_regression(const MatrixXd& X, const VectorXd& y, const std::vector<std::size_t>& units) {
  MatrixXd A(static_cast<Eigen::Index>(units.size()), X.cols() + 1);
  VectorXd b(static_cast<Eigen::Index>(units.size()));
  for (std::size_t a = 0; a < units.size(); ++a) {
    A(static_cast<Eigen::Index>(a), 0) = 1.0;
    A.row(static_cast<Eigen::Index>(a)).tail(X.cols()) = X.row(static_cast<Eigen::Index>(units[a]));
    b(static_cast<Eigen::Index>(a)) = y(static_cast<Eigen::Index>(units[a]));
  }
  return A.colPivHouseholderQr().solve(b);
}

}  // namespace

AteEstimate match_ate(const MatchSample& sample, const std::vector<int>& label, const MatchConfig& cfg) {
  cfg.validate();
  if (label.size() != sample.size()) throw ValidationError("label vector does not match the sample");
  AteEstimate est;
  est.label = std::string(to_string(cfg.treatment));
  for (int l : label) {
    if (l == 1) ++est.treated;
    if (l == 0) ++est.controls;
  }
  if (est.treated == 0) {
    est.empty = true;
    return est;
  }

  const Eigen::Index p = sample.covariates.cols();
  VectorXd weight = VectorXd::Zero(p);
  {
    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < sample.size(); ++i) {
      if (label[i] >= 0) used.push_back(i);
    }
    for (Eigen::Index c = 0; c < p; ++c) {
      std::vector<double> v;
      v.reserve(used.size());
      for (auto i : used) v.push_back(sample.covariates(static_cast<Eigen::Index>(i), c));
      const double sd = v.size() > 1 ? sample_sd(v) : 0.0;
      weight(c) = sd > 0 ? 1.0 / sd : 0.0;
    }
  }
  const MatrixXd xs = sample.covariates * weight.asDiagonal();

  struct Cell {
    std::vector<std::size_t> treated, controls;
  };
  std::vector<Cell> cells;
  for (auto& units : exact_cells(sample, label, cfg.exact)) {
    Cell c;
    for (auto i : units) (label[i] == 1 ? c.treated : c.controls).push_back(i);
    if (!c.treated.empty() && !c.controls.empty()) {
      est.matches += c.treated.size();
      cells.push_back(std::move(c));
    }
  }
  est.unmatched_treated = est.treated - est.matches;
  if (est.matches == 0) {
    throw NoOverlapError(fmt::format("no exact-match cell holds both treated and control units for {}", est.label));
  }

  // Units in mixed cells, with their opposite and own group.
  struct Unit {
    std::size_t index;
    const std::vector<std::size_t>* other;
    const std::vector<std::size_t>* own;
  };
  std::vector<Unit> units;
  for (const auto& c : cells) {
    for (auto i : c.treated) units.push_back({i, &c.controls, &c.treated});
    for (auto i : c.controls) units.push_back({i, &c.treated, &c.controls});
  }
  std::sort(units.begin(), units.end(), [](const Unit& a, const Unit& b) { return a.index < b.index; });
  const std::size_t N = units.size();
  const auto M = static_cast<std::size_t>(cfg.neighbors);

  std::vector<std::vector<std::size_t>> matched(N);
  std::vector<double> sigma2(N, 0.0);
  const VectorXd& y = sample.outcome;
  parallel_for(N, [&](std::size_t u) {
    const auto i = units[u].index;
    matched[u] = nearest(xs, i, *units[u].other, M);
    const auto same = nearest(xs, i, *units[u].own, 2);
    if (!same.empty()) {
      double avg = 0;
      for (auto j : same) avg += y(static_cast<Eigen::Index>(j));
      avg /= static_cast<double>(same.size());
      const double J = static_cast<double>(same.size());
      const double dev = y(static_cast<Eigen::Index>(i)) - avg;
      sigma2[u] = J / (J + 1.0) * dev * dev;
    }
  });

  VectorXd mu1, mu0;
  if (cfg.bias_correction) {
    std::vector<std::size_t> t_units, c_units;
    for (const auto& u : units) (label[u.index] == 1 ? t_units : c_units).push_back(u.index);
    mu1 = group_regression(xs, y, t_units);
    mu0 = group_regression(xs, y, c_units);
  }
  auto predict = [&](const VectorXd& b, std::size_t i) {
    return b(0) + xs.row(static_cast<Eigen::Index>(i)).dot(b.tail(xs.cols()));
  };

  std::vector<double> tau(N);
  std::vector<double> used(sample.size(), 0.0);
  double outcome_sum = 0;
  for (std::size_t u = 0; u < N; ++u) {
    const auto i = units[u].index;
    const bool treated = label[i] == 1;
    double other = 0;
    for (auto j : matched[u]) {
      double yj = y(static_cast<Eigen::Index>(j));
      if (cfg.bias_correction) {
        const VectorXd& b = treated ? mu0 : mu1;
        yj += predict(b, i) - predict(b, j);
      }
      other += yj;
      used[j] += 1.0 / static_cast<double>(matched[u].size());
    }
    other /= static_cast<double>(matched[u].size());
    const double yi = y(static_cast<Eigen::Index>(i));
    tau[u] = treated ? yi - other : other - yi;
    outcome_sum += yi;
  }
  const double n = static_cast<double>(N);
  est.estimate = std::accumulate(tau.begin(), tau.end(), 0.0) / n;
  est.mean_outcome = outcome_sum / n;
  double v = 0;
  const double m = static_cast<double>(M);
  for (std::size_t u = 0; u < N; ++u) {
    const double K = used[units[u].index] * m;  // times used, weighted by 1/M per match
    const double km = K / m;
    v += (tau[u] - est.estimate) * (tau[u] - est.estimate) + (km * km + (2 * m - 1) / m * km) * sigma2[u];
  }
  est.se = std::sqrt(v) / n;
  est.p_value = est.se > 0 ? 2.0 * normal_upper_tail(std::abs(est.estimate) / est.se) : (est.estimate == 0 ? 1.0 : 0.0);
  return est;
}

AteEstimate match_ate(const MatchSample& sample, const MatchConfig& cfg) {
  return match_ate(sample, treatment_labels(sample, cfg.treatment), cfg);
}

AteEstimate match_ate(const ProductivitySeries& series, const Panel& panel, const MatchConfig& cfg) {
  return match_ate(build_match_sample(series, panel), cfg);
}

FourEffects four_effects(const MatchSample& sample, const MatchConfig& base_cfg) {
  auto run = [&](Treatment t, ExactMatch e) {
    MatchConfig cfg = base_cfg;
    cfg.treatment = t;
    cfg.exact = e;
    return match_ate(sample, cfg);
  };
  FourEffects out;
  out.delta = run(Treatment::kInnovator, base_cfg.exact);
  out.d10 = run(Treatment::kProductOnly, ExactMatch::kYear);
  out.d01 = run(Treatment::kProcessOnly, ExactMatch::kYear);
  out.d11 = run(Treatment::kBoth, ExactMatch::kYear);
  return out;
}

ComplementarityTest complementarity_test(const AteEstimate& d10, const AteEstimate& d01, const AteEstimate& d11,
                                         bool zero_convention, double alpha) {
  if (!(alpha > 0 && alpha < 1)) throw ValidationError("significance level must lie in (0, 1)");
  ComplementarityTest t;
  auto take = [&](const AteEstimate& e, const char* name) -> std::pair<double, double> {
    if (e.empty) {
      if (!zero_convention) {
        throw IncompleteInputsError(fmt::format("effect {} is empty; enable the zero convention to treat it as 0", name));
      }
      t.zeroed.emplace_back(name);
      return {0.0, 0.0};
    }
    if (zero_convention && e.p_value >= alpha) {
      t.zeroed.emplace_back(name);
      return {0.0, 0.0};
    }
    return {e.estimate, e.se};
  };
  const auto [a11, s11] = take(d11, "d11");
  const auto [a10, s10] = take(d10, "d10");
  const auto [a01, s01] = take(d01, "d01");
  t.gap = a11 - a10 - a01;
  t.se = std::sqrt(s11 * s11 + s10 * s10 + s01 * s01);
  if (t.se > 0) {
    t.z = t.gap / t.se;
    t.p_value = normal_upper_tail(t.z);
  } else {
    t.z = 0;
    t.p_value = t.gap > 0 ? 0.0 : 1.0;
  }
  t.complementary = t.gap > 0 && t.p_value < alpha;
  return t;
}

std::vector<double> placebo_ates(const MatchSample& sample, const MatchConfig& cfg, int permutations,
                                 std::uint64_t seed) {
  if (permutations < 1) throw ValidationError("permutations must be >= 1");
  const auto base = treatment_labels(sample, cfg.treatment);
  const auto cells = exact_cells(sample, base, cfg.exact);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(permutations));
  for (int p = 0; p < permutations; ++p) {
    std::seed_seq seq{seed, static_cast<std::uint64_t>(p)};
    std::mt19937_64 rng(seq);
    std::vector<int> label = base;
    for (const auto& cell : cells) {
      std::vector<int> vals;
      for (auto i : cell) vals.push_back(base[i]);
      std::shuffle(vals.begin(), vals.end(), rng);
      for (std::size_t a = 0; a < cell.size(); ++a) label[cell[a]] = vals[a];
    }
    out.push_back(match_ate(sample, label, cfg).estimate);
  }
  return out;
}

}  // namespace innoprod
