#include "innoprod/prodfn.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "innoprod/error.hpp"
#include "innoprod/optimizer.hpp"
#include "innoprod/polynomial.hpp"
#include "prodfn_detail.hpp"

namespace innoprod {

std::string_view to_string(EstimatorKind k) { return k == EstimatorKind::kAcf ? "acf" : "op"; }

std::string_view to_string(SampleGroup g) {
  switch (g) {
    case SampleGroup::kAll: return "all";
    case SampleGroup::kEntrants: return "entrants";
    case SampleGroup::kIncumbents: return "incumbents";
  }
  return "all";
}

std::string_view to_string(VarianceMethod v) {
  switch (v) {
    case VarianceMethod::kNone: return "none";
    case VarianceMethod::kAnalytic: return "analytic";
    case VarianceMethod::kBootstrap: return "bootstrap";
  }
  return "none";
}

EstimatorKind parse_estimator(std::string_view s) {
  if (s == "acf") return EstimatorKind::kAcf;
  if (s == "op") return EstimatorKind::kOp;
  throw ValidationError("unknown estimator '" + std::string(s) + "' (acf, op)");
}

SampleGroup parse_group(std::string_view s) {
  if (s == "all") return SampleGroup::kAll;
  if (s == "entrants") return SampleGroup::kEntrants;
  if (s == "incumbents") return SampleGroup::kIncumbents;
  throw ValidationError("unknown group '" + std::string(s) + "' (all, entrants, incumbents)");
}

VarianceMethod parse_variance(std::string_view s) {
  if (s == "none") return VarianceMethod::kNone;
  if (s == "analytic") return VarianceMethod::kAnalytic;
  if (s == "bootstrap") return VarianceMethod::kBootstrap;
  throw ValidationError("unknown variance method '" + std::string(s) + "' (none, analytic, bootstrap)");
}

void EstimationSpec::validate() const {
  if (phi_degree < 1 || g_degree < 1) throw ValidationError("polynomial degrees must be >= 1");
  if (bootstrap < 1) throw ValidationError("bootstrap replications must be >= 1");
  if (starts < 1) throw ValidationError("starts must be >= 1");
  if (nm_iterations < 0) throw ValidationError("nm_iterations must be >= 0");
  if (!(tolerance > 0)) throw ValidationError("tolerance must be positive");
  if (min_lagged < 1) throw ValidationError("min_lagged must be >= 1");
  if (max_entrant_age < 0) throw ValidationError("max_entrant_age must be >= 0");
  if (hm_interaction && estimator == EstimatorKind::kOp) {
    throw ValidationError("hm_interaction is only available with the acf estimator");
  }
}

EstimationSpec EstimationSpec::from_config(const KeyValueConfig& cfg) {
  cfg.require_known({"estimator", "phi_degree", "g_degree", "spillovers", "hm_interaction", "group",
                     "max_entrant_age", "time_dummies", "industry_dummies", "weighting", "starts", "nm_iterations",
                     "tolerance", "min_lagged", "variance", "bootstrap", "seed"},
                    "estimation spec");
  EstimationSpec s;
  s.estimator = parse_estimator(cfg.get_string("estimator", "acf"));
  s.phi_degree = static_cast<int>(cfg.get_int("phi_degree", s.phi_degree));
  s.g_degree = static_cast<int>(cfg.get_int("g_degree", s.g_degree));
  s.spillovers = cfg.get_bool("spillovers", s.spillovers);
  s.hm_interaction = cfg.get_bool("hm_interaction", s.hm_interaction);
  s.group = parse_group(cfg.get_string("group", "all"));
  s.max_entrant_age = static_cast<int>(cfg.get_int("max_entrant_age", s.max_entrant_age));
  s.time_dummies = cfg.get_bool("time_dummies", s.time_dummies);
  s.industry_dummies = cfg.get_bool("industry_dummies", s.industry_dummies);
  const auto w = cfg.get_string("weighting", "identity");
  if (w == "identity") {
    s.weighting = Weighting::kIdentity;
  } else if (w == "two_step") {
    s.weighting = Weighting::kTwoStep;
  } else {
    throw ValidationError("unknown weighting '" + w + "' (identity, two_step)");
  }
  s.starts = static_cast<int>(cfg.get_int("starts", s.starts));
  s.nm_iterations = static_cast<int>(cfg.get_int("nm_iterations", s.nm_iterations));
  s.tolerance = cfg.get_double("tolerance", s.tolerance);
  s.min_lagged = static_cast<int>(cfg.get_int("min_lagged", s.min_lagged));
  s.variance = parse_variance(cfg.get_string("variance", "bootstrap"));
  s.bootstrap = static_cast<int>(cfg.get_int("bootstrap", s.bootstrap));
  s.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(s.seed)));
  s.validate();
  return s;
}

KeyValueConfig EstimationSpec::to_config() const {
  KeyValueConfig cfg;
  cfg.set("estimator", std::string(to_string(estimator)));
  cfg.set("phi_degree", std::to_string(phi_degree));
  cfg.set("g_degree", std::to_string(g_degree));
  cfg.set("spillovers", spillovers ? "true" : "false");
  cfg.set("hm_interaction", hm_interaction ? "true" : "false");
  cfg.set("group", std::string(to_string(group)));
  cfg.set("max_entrant_age", std::to_string(max_entrant_age));
  cfg.set("time_dummies", time_dummies ? "true" : "false");
  cfg.set("industry_dummies", industry_dummies ? "true" : "false");
  cfg.set("weighting", weighting == Weighting::kIdentity ? "identity" : "two_step");
  cfg.set("starts", std::to_string(starts));
  cfg.set("nm_iterations", std::to_string(nm_iterations));
  cfg.set("tolerance", fmt::format("{}", tolerance));
  cfg.set("min_lagged", std::to_string(min_lagged));
  cfg.set("variance", std::string(to_string(variance)));
  cfg.set("bootstrap", std::to_string(bootstrap));
  cfg.set("seed", std::to_string(seed));
  return cfg;
}

std::optional<std::size_t> EstimationResult::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  return std::nullopt;
}

double EstimationResult::value(const std::string& name) const {
  auto i = index_of(name);
  if (!i) throw LookupError("no coefficient named " + name);
  return coef(static_cast<Eigen::Index>(*i));
}

double EstimationResult::se(const std::string& name) const { return std::sqrt(covariance(name, name)); }

double EstimationResult::covariance(const std::string& a, const std::string& b) const {
  auto i = index_of(a);
  auto j = index_of(b);
  if (!i || !j) throw LookupError("no coefficient named " + (!i ? a : b));
  if (variance.rows() != coef.size()) throw InferenceError("result carries no variance matrix");
  return variance(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
}

namespace detail {

namespace {

struct RowValues {
  double y, l, k, r, e1, e2, m, logk, logr, logi, lm, age, north, d0, hm;
};

const std::map<std::string, std::string>& label_map() {
  static const std::map<std::string, std::string> labels{
      {"l_plus", "log(Employees) x (1-D0)"},
      {"l_plus0", "log(Employees) x D0"},
      {"k", "log(Capital/Employees) x (1-D0)"},
      {"k0", "log(Capital/Employees) x D0"},
      {"r", "log(R&D/Employees)"},
      {"r_hm", "log(R&D/Employees) x D_HM"},
      {"r_other", "log(R&D/Employees) x (1-D_HM)"},
      {"d0_shift", "D0: Dummy Zero R&D"},
      {"e_intra", "log(Intra-industry R&D) x (1-D0)"},
      {"e_intra0", "log(Intra-industry R&D) x D0"},
      {"e_inter", "log(Inter-industry R&D) x (1-D0)"},
      {"e_inter0", "log(Inter-industry R&D) x D0"},
      {"age", "Age"},
      {"north", "North"},
  };
  return labels;
}

// Dummy coding over the given positions: first level (sorted) is the reference.
template <typename Key>
void dummy_levels(const std::vector<Key>& keys, const std::vector<std::size_t>& positions, bool enabled,
                  const std::string& prefix, std::vector<int>& idx, std::vector<std::string>& names,
                  const std::function<std::string(const Key&)>& show) {
  idx.assign(positions.size(), -1);
  names.clear();
  if (!enabled) return;
  std::set<Key> levels;
  for (auto p : positions) levels.insert(keys[p]);
  std::map<Key, int> code;
  int next = -1;
  for (const auto& lv : levels) {
    if (next >= 0) names.push_back(prefix + show(lv));
    code[lv] = next++;
  }
  for (std::size_t i = 0; i < positions.size(); ++i) idx[i] = code[keys[positions[i]]];
}

}  // namespace

Design build_design(const Panel& panel, const EstimationSpec& spec) {
  spec.validate();
  const bool op = spec.estimator == EstimatorKind::kOp;
  if (!panel.has_capital()) throw DependencyError("estimation needs the capital stage output (capital column)");
  if (spec.spillovers && !panel.has_spillovers()) {
    throw DependencyError("estimation with spillovers needs the spillover stage output");
  }
  Design d;
  d.kind = spec.estimator;

  std::vector<RowValues> vals;
  std::vector<std::ptrdiff_t> pos_of(panel.size(), -1);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& r = panel[i];
    if (spec.group == SampleGroup::kEntrants && r.age > spec.max_entrant_age) continue;
    if (spec.group == SampleGroup::kIncumbents && r.age <= spec.max_entrant_age) continue;
    RowValues v{};
    const double L = r.employees;
    v.y = op ? std::log(r.revenue / L) : std::log(r.value_added / L);
    v.l = std::log(L);
    v.logk = std::log(r.capital);
    v.k = v.logk - v.l;
    v.d0 = r.d_zero_rnd ? 1.0 : 0.0;
    v.logr = r.d_zero_rnd ? 0.0 : std::log(r.rnd);
    v.r = r.d_zero_rnd ? 0.0 : v.logr - v.l;
    v.e1 = spec.spillovers ? std::log1p(r.intra_rnd) : 0.0;
    v.e2 = spec.spillovers ? std::log1p(r.inter_rnd) : 0.0;
    v.m = std::log(r.materials);
    v.lm = v.m - v.l;
    v.age = r.age;
    v.north = r.north ? 1.0 : 0.0;
    v.hm = is_high_or_medium_high(r.tech_class) ? 1.0 : 0.0;
    bool ok = std::isfinite(v.y) && std::isfinite(v.l) && std::isfinite(v.k) && std::isfinite(v.r) &&
              std::isfinite(v.e1) && std::isfinite(v.e2);
    if (!op) ok = ok && std::isfinite(v.m);
    if (op) {
      ok = ok && std::isfinite(v.lm);
      if (ok) {
        ++d.candidates;
        if (!(r.investment > 0)) {
          ++d.dropped_zero_investment;
          continue;
        }
      }
      v.logi = std::log(r.investment);
    }
    if (!ok) continue;
    pos_of[i] = static_cast<std::ptrdiff_t>(d.rows.size());
    d.rows.push_back(i);
    vals.push_back(v);
  }
  if (!op) d.candidates = d.rows.size();
  const std::size_t n = d.rows.size();
  if (n == 0) throw InsufficientDataError("estimation sample is empty");

  d.lag.assign(n, -1);
  std::map<std::size_t, std::size_t> firm_code;
  d.cluster.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t i = d.rows[s];
    if (auto l = panel.lag(i); l && pos_of[*l] >= 0) {
      d.lag[s] = pos_of[*l];
      d.lagged.push_back(s);
    }
    auto [it, inserted] = firm_code.emplace(panel.firm_of(i), firm_code.size());
    d.cluster[s] = it->second;
  }
  d.n_clusters = firm_code.size();
  if (d.lagged.size() < static_cast<std::size_t>(spec.min_lagged)) {
    throw InsufficientDataError(fmt::format("{} observations with a lagged wave; at least {} required",
                                            d.lagged.size(), spec.min_lagged));
  }

  d.y.resize(n);
  for (std::size_t s = 0; s < n; ++s) d.y(s) = vals[s].y;

  // Dummies.
  std::vector<int> years(panel.size());
  std::vector<std::string> inds(panel.size());
  for (std::size_t s = 0; s < n; ++s) {
    years[s] = panel[d.rows[s]].year;
    inds[s] = panel[d.rows[s]].industry;
  }
  std::vector<std::size_t> all_pos(n);
  for (std::size_t s = 0; s < n; ++s) all_pos[s] = s;
  const std::function<std::string(const int&)> show_year = [](const int& y) { return std::to_string(y); };
  const std::function<std::string(const std::string&)> show_ind = [](const std::string& s) { return s; };
  dummy_levels<int>(years, all_pos, spec.time_dummies, "year_", d.year_idx, d.year_names, show_year);
  dummy_levels<std::string>(inds, all_pos, spec.industry_dummies, "industry_", d.ind_idx, d.ind_names, show_ind);
  dummy_levels<int>(years, d.lagged, spec.time_dummies, "year_", d.g_year, d.g_year_names, show_year);
  dummy_levels<std::string>(inds, d.lagged, spec.industry_dummies, "industry_", d.g_ind, d.g_ind_names, show_ind);

  // First stage: complete polynomial per regime.
  std::vector<std::string> vars1, vars0;
  std::vector<std::function<double(const RowValues&)>> get1, get0;
  auto add = [](std::vector<std::string>& names, std::vector<std::function<double(const RowValues&)>>& getters,
                const std::string& name, std::function<double(const RowValues&)> f) {
    names.push_back(name);
    getters.push_back(std::move(f));
  };
  if (!op) {
    for (int regime = 1; regime >= 0; --regime) {
      auto& nm = regime ? vars1 : vars0;
      auto& gt = regime ? get1 : get0;
      add(nm, gt, "l", [](const RowValues& v) { return v.l; });
      add(nm, gt, "k", [](const RowValues& v) { return v.k; });
      if (regime) add(nm, gt, "r", [](const RowValues& v) { return v.r; });
      if (spec.spillovers) {
        add(nm, gt, "e_intra", [](const RowValues& v) { return v.e1; });
        add(nm, gt, "e_inter", [](const RowValues& v) { return v.e2; });
      }
      add(nm, gt, "age", [](const RowValues& v) { return v.age; });
      add(nm, gt, "m", [](const RowValues& v) { return v.m; });
    }
  } else {
    for (int regime = 1; regime >= 0; --regime) {
      auto& nm = regime ? vars1 : vars0;
      auto& gt = regime ? get1 : get0;
      add(nm, gt, "logK", [](const RowValues& v) { return v.logk; });
      if (regime) add(nm, gt, "logR", [](const RowValues& v) { return v.logr; });
      if (spec.spillovers) {
        add(nm, gt, "e_intra", [](const RowValues& v) { return v.e1; });
        add(nm, gt, "e_inter", [](const RowValues& v) { return v.e2; });
      }
      add(nm, gt, "age", [](const RowValues& v) { return v.age; });
      add(nm, gt, "logI", [](const RowValues& v) { return v.logi; });
    }
  }

  std::vector<MatrixXd> blocks;
  std::vector<std::vector<std::string>> block_names;
  for (int regime = 1; regime >= 0; --regime) {
    const auto& nm = regime ? vars1 : vars0;
    const auto& gt = regime ? get1 : get0;
    std::vector<std::size_t> members;
    for (std::size_t s = 0; s < n; ++s) {
      if ((vals[s].d0 == 0.0) == (regime == 1)) members.push_back(s);
    }
    PolynomialBasis basis(nm, spec.phi_degree);
    MatrixXd raw(static_cast<Eigen::Index>(members.size()), static_cast<Eigen::Index>(nm.size()));
    for (std::size_t a = 0; a < members.size(); ++a) {
      for (std::size_t v = 0; v < nm.size(); ++v) raw(a, v) = gt[v](vals[members[a]]);
    }
    MatrixXd block = MatrixXd::Zero(n, basis.size());
    if (!members.empty()) {
      const auto st = Standardizer::fit(raw);
      const MatrixXd poly = basis.evaluate(st.apply(raw));
      for (std::size_t a = 0; a < members.size(); ++a) block.row(members[a]) = poly.row(a);
    }
    blocks.push_back(std::move(block));
    block_names.push_back(basis.term_names(regime ? "R1:" : "R0:"));
  }

  std::size_t cols = blocks[0].cols() + blocks[1].cols() + 1 + d.year_names.size() + d.ind_names.size();
  if (op) cols += 4;
  d.F = MatrixXd::Zero(n, cols);
  Eigen::Index c = 0;
  for (int b = 0; b < 2; ++b) {
    d.F.middleCols(c, blocks[b].cols()) = blocks[b];
    for (const auto& name : block_names[b]) {
      d.F_names.push_back(name);
      d.phi_col.push_back(1);
    }
    c += blocks[b].cols();
  }
  for (std::size_t s = 0; s < n; ++s) d.F(s, c) = vals[s].north;
  d.F_names.push_back("north");
  d.phi_col.push_back(1);
  ++c;
  for (std::size_t j = 0; j < d.year_names.size(); ++j, ++c) {
    for (std::size_t s = 0; s < n; ++s) d.F(s, c) = d.year_idx[s] == static_cast<int>(j) ? 1.0 : 0.0;
    d.F_names.push_back(d.year_names[j]);
    d.phi_col.push_back(1);
  }
  for (std::size_t j = 0; j < d.ind_names.size(); ++j, ++c) {
    for (std::size_t s = 0; s < n; ++s) d.F(s, c) = d.ind_idx[s] == static_cast<int>(j) ? 1.0 : 0.0;
    d.F_names.push_back(d.ind_names[j]);
    d.phi_col.push_back(1);
  }
  if (op) {
    const std::vector<std::pair<std::string, std::function<double(const RowValues&)>>> free{
        {"l x (1-D0)", [](const RowValues& v) { return (1 - v.d0) * v.l; }},
        {"l x D0", [](const RowValues& v) { return v.d0 * v.l; }},
        {"log(M/L) x (1-D0)", [](const RowValues& v) { return (1 - v.d0) * v.lm; }},
        {"log(M/L) x D0", [](const RowValues& v) { return v.d0 * v.lm; }},
    };
    for (std::size_t f = 0; f < free.size(); ++f, ++c) {
      for (std::size_t s = 0; s < n; ++s) d.F(s, c) = free[f].second(vals[s]);
      d.F_names.push_back(free[f].first);
      d.phi_col.push_back(0);
      (f < 2 ? d.free_l : d.free_m).push_back(static_cast<std::size_t>(c));
    }
  }

  // Second stage regressors and instruments.
  struct Term {
    std::string name;
    std::function<double(const RowValues&)> x;
    std::function<double(const RowValues& cur, const RowValues* lag)> z;
    std::string z_name;
  };
  std::vector<Term> terms;
  auto one_minus = [](const RowValues& v) { return 1.0 - v.d0; };
  if (!op) {
    terms.push_back({"l_plus", [=](const RowValues& v) { return one_minus(v) * v.l; },
                     [=](const RowValues& v, const RowValues* l) { return one_minus(v) * (l ? l->l : 0.0); },
                     "(1-D0) x l[t-1]"});
    terms.push_back({"l_plus0", [](const RowValues& v) { return v.d0 * v.l; },
                     [](const RowValues& v, const RowValues* l) { return v.d0 * (l ? l->l : 0.0); }, "D0 x l[t-1]"});
    terms.push_back({"k", [=](const RowValues& v) { return one_minus(v) * v.k; },
                     [=](const RowValues& v, const RowValues*) { return one_minus(v) * v.logk; }, "(1-D0) x log K"});
    terms.push_back({"k0", [](const RowValues& v) { return v.d0 * v.k; },
                     [](const RowValues& v, const RowValues*) { return v.d0 * v.logk; }, "D0 x log K"});
  } else {
    terms.push_back({"k", [=](const RowValues& v) { return one_minus(v) * v.logk; },
                     [=](const RowValues& v, const RowValues* l) { return one_minus(v) * (l ? l->logk : 0.0); },
                     "(1-D0) x log K[t-1]"});
    terms.push_back({"k0", [](const RowValues& v) { return v.d0 * v.logk; },
                     [](const RowValues& v, const RowValues* l) { return v.d0 * (l ? l->logk : 0.0); },
                     "D0 x log K[t-1]"});
  }
  auto rvar = [op](const RowValues& v) { return op ? v.logr : v.r; };
  if (spec.hm_interaction) {
    terms.push_back({"r_hm", [=](const RowValues& v) { return one_minus(v) * v.hm * rvar(v); },
                     [=](const RowValues& v, const RowValues*) { return one_minus(v) * v.hm * v.logr; },
                     "(1-D0) x D_HM x log R"});
    terms.push_back({"r_other", [=](const RowValues& v) { return one_minus(v) * (1 - v.hm) * rvar(v); },
                     [=](const RowValues& v, const RowValues*) { return one_minus(v) * (1 - v.hm) * v.logr; },
                     "(1-D0) x (1-D_HM) x log R"});
  } else {
    terms.push_back({"r", [=](const RowValues& v) { return one_minus(v) * rvar(v); },
                     [=](const RowValues& v, const RowValues*) { return one_minus(v) * v.logr; }, "(1-D0) x log R"});
  }
  terms.push_back({"d0_shift", [](const RowValues& v) { return v.d0; },
                   [](const RowValues& v, const RowValues*) { return v.d0; }, "D0"});
  if (spec.spillovers) {
    terms.push_back({"e_intra", [=](const RowValues& v) { return one_minus(v) * v.e1; },
                     [=](const RowValues& v, const RowValues*) { return one_minus(v) * v.e1; }, "(1-D0) x e_intra"});
    terms.push_back({"e_intra0", [](const RowValues& v) { return v.d0 * v.e1; },
                     [](const RowValues& v, const RowValues*) { return v.d0 * v.e1; }, "D0 x e_intra"});
    terms.push_back({"e_inter", [=](const RowValues& v) { return one_minus(v) * v.e2; },
                     [=](const RowValues& v, const RowValues*) { return one_minus(v) * v.e2; }, "(1-D0) x e_inter"});
    terms.push_back({"e_inter0", [](const RowValues& v) { return v.d0 * v.e2; },
                     [](const RowValues& v, const RowValues*) { return v.d0 * v.e2; }, "D0 x e_inter"});
  }
  terms.push_back({"age", [](const RowValues& v) { return v.age; },
                   [](const RowValues& v, const RowValues*) { return v.age; }, "age"});
  terms.push_back({"north", [](const RowValues& v) { return v.north; },
                   [](const RowValues& v, const RowValues*) { return v.north; }, "north"});

  const std::size_t q = terms.size();
  d.X.resize(n, q);
  d.Z = MatrixXd::Zero(n, q);
  for (std::size_t t = 0; t < q; ++t) {
    d.theta_names.push_back(terms[t].name);
    d.z_names.push_back(terms[t].z_name);
    for (std::size_t s = 0; s < n; ++s) {
      d.X(s, t) = terms[t].x(vals[s]);
      const RowValues* lagv = d.lag[s] >= 0 ? &vals[static_cast<std::size_t>(d.lag[s])] : nullptr;
      d.Z(s, t) = terms[t].z(vals[s], lagv);
    }
  }
  std::vector<std::string> unidentified;
  for (std::size_t t = 0; t < q; ++t) {
    double mean = 0;
    for (auto s : d.lagged) mean += d.Z(s, t);
    mean /= static_cast<double>(d.lagged.size());
    double var = 0;
    for (auto s : d.lagged) var += (d.Z(s, t) - mean) * (d.Z(s, t) - mean);
    var /= static_cast<double>(d.lagged.size());
    if (!(var > 1e-20)) {
      unidentified.push_back(d.theta_names[t]);
      continue;
    }
    d.Z.col(t) /= std::sqrt(var);
  }
  if (!unidentified.empty()) {
    throw IdentificationError(fmt::format("instruments without variation for: {}", fmt::join(unidentified, ", ")));
  }

  const std::size_t nl = d.lagged.size();
  d.pd.resize(nl);
  d.pc.resize(nl);
  for (std::size_t j = 0; j < nl; ++j) {
    const auto& r = panel[d.rows[d.lagged[j]]];
    d.pd(j) = r.prod_innov ? 1.0 : 0.0;
    d.pc(j) = r.proc_innov ? 1.0 : 0.0;
  }
  auto varies = [](const VectorXd& v) { return v.size() > 0 && v.maxCoeff() != v.minCoeff(); };
  const VectorXd both = d.pd.cwiseProduct(d.pc);
  d.use_pd = varies(d.pd);
  d.use_pc = varies(d.pc);
  d.use_pdpc = varies(both) && both != d.pd && both != d.pc;
  return d;
}

FirstFit fit_first(const Design& d) {
  const auto ls = least_squares(d.F, d.y, d.F_names);
  FirstFit f;
  f.gamma = ls.coef;
  f.fitted = ls.fitted;
  f.residual = ls.residual;
  f.r2 = ls.r2;
  f.phi = f.fitted;
  for (std::size_t c = 0; c < d.phi_col.size(); ++c) {
    if (!d.phi_col[c]) f.phi -= d.F.col(static_cast<Eigen::Index>(c)) * f.gamma(static_cast<Eigen::Index>(c));
  }
  return f;
}

MomentModel::MomentModel(const Design& d, VectorXd phi, int g_degree)
    : d_(d), phi_(std::move(phi)), g_degree_(g_degree) {
  const std::size_t ny = d.g_year_names.size();
  const std::size_t ni = d.g_ind_names.size();
  dd_ = MatrixXd::Zero(ny + ni, ny + ni);
  for (std::size_t j = 0; j < d.lagged.size(); ++j) {
    const int a = d.g_year[j];
    const int b = d.g_ind[j];
    if (a >= 0) dd_(a, a) += 1;
    if (b >= 0) dd_(ny + b, ny + b) += 1;
    if (a >= 0 && b >= 0) {
      dd_(a, ny + b) += 1;
      dd_(ny + b, a) += 1;
    }
  }
}

std::size_t MomentModel::g_continuous() const {
  const std::size_t flags = (d_.use_pd ? 1 : 0) + (d_.use_pc ? 1 : 0) + (d_.use_pdpc ? 1 : 0);
  return static_cast<std::size_t>(g_degree_) + 1 + 2 * flags;
}

std::size_t MomentModel::g_size() const {
  return g_continuous() + d_.g_year_names.size() + d_.g_ind_names.size();
}

std::vector<std::string> MomentModel::g_names() const {
  std::vector<std::string> names{"1"};
  for (int p = 1; p <= g_degree_; ++p) names.push_back(p == 1 ? "w" : fmt::format("w^{}", p));
  std::vector<std::string> flags;
  if (d_.use_pd) flags.push_back("PD");
  if (d_.use_pc) flags.push_back("PC");
  if (d_.use_pdpc) flags.push_back("PDxPC");
  for (const auto& f : flags) names.push_back(f);
  for (const auto& f : flags) names.push_back("w*" + f);
  for (const auto& y : d_.g_year_names) names.push_back(y);
  for (const auto& i : d_.g_ind_names) names.push_back(i);
  return names;
}

MatrixXd MomentModel::g_design(const VectorXd& w, MatrixXd* dw) const {
  const Eigen::Index nl = w.size();
  const Eigen::Index pc = static_cast<Eigen::Index>(g_continuous());
  const Eigen::Index ny = static_cast<Eigen::Index>(d_.g_year_names.size());
  const Eigen::Index ni = static_cast<Eigen::Index>(d_.g_ind_names.size());
  MatrixXd G = MatrixXd::Zero(nl, pc + ny + ni);
  if (dw) *dw = MatrixXd::Zero(nl, pc + ny + ni);
  Eigen::Index c = 0;
  G.col(c++).setOnes();
  for (int p = 1; p <= g_degree_; ++p, ++c) {
    G.col(c) = G.col(c - 1).cwiseProduct(w);
    if (dw) dw->col(c) = static_cast<double>(p) * G.col(c - 1);
  }
  std::vector<VectorXd> flags;
  if (d_.use_pd) flags.push_back(d_.pd);
  if (d_.use_pc) flags.push_back(d_.pc);
  if (d_.use_pdpc) flags.push_back(d_.pd.cwiseProduct(d_.pc));
  for (const auto& f : flags) G.col(c++) = f;
  for (const auto& f : flags) {
    G.col(c) = f.cwiseProduct(w);
    if (dw) dw->col(c) = f;
    ++c;
  }
  for (Eigen::Index j = 0; j < nl; ++j) {
    if (d_.g_year[j] >= 0) G(j, pc + d_.g_year[j]) = 1.0;
    if (d_.g_ind[j] >= 0) G(j, pc + ny + d_.g_ind[j]) = 1.0;
  }
  return G;
}

MomentModel::Eval MomentModel::evaluate(const VectorXd& theta) const {
  Eval e;
  e.omega = phi_ - d_.X * theta;
  const std::size_t nl = d_.lagged.size();
  VectorXd o(nl);
  e.w.resize(nl);
  for (std::size_t j = 0; j < nl; ++j) {
    o(j) = e.omega(d_.lagged[j]);
    e.w(j) = e.omega(d_.lag[d_.lagged[j]]);
  }
  e.w_mean = e.w.mean();
  const double var = (e.w.array() - e.w_mean).square().sum() / static_cast<double>(nl);
  e.w_sd = var > 0 ? std::sqrt(var) : 1.0;
  const VectorXd ws = (e.w.array() - e.w_mean) / e.w_sd;

  // Continuous block built explicitly; dummy blocks by group sums.
  const Eigen::Index pc = static_cast<Eigen::Index>(g_continuous());
  const Eigen::Index ny = static_cast<Eigen::Index>(d_.g_year_names.size());
  const Eigen::Index ni = static_cast<Eigen::Index>(d_.g_ind_names.size());
  MatrixXd C(nl, pc);
  Eigen::Index c = 0;
  C.col(c++).setOnes();
  for (int p = 1; p <= g_degree_; ++p, ++c) C.col(c) = C.col(c - 1).cwiseProduct(ws);
  const VectorXd both = d_.pd.cwiseProduct(d_.pc);
  if (d_.use_pd) C.col(c++) = d_.pd;
  if (d_.use_pc) C.col(c++) = d_.pc;
  if (d_.use_pdpc) C.col(c++) = both;
  if (d_.use_pd) C.col(c++) = d_.pd.cwiseProduct(ws);
  if (d_.use_pc) C.col(c++) = d_.pc.cwiseProduct(ws);
  if (d_.use_pdpc) C.col(c++) = both.cwiseProduct(ws);

  const Eigen::Index p = pc + ny + ni;
  MatrixXd A = MatrixXd::Zero(p, p);
  VectorXd rhs = VectorXd::Zero(p);
  A.topLeftCorner(pc, pc).selfadjointView<Eigen::Lower>().rankUpdate(C.transpose());
  A.topLeftCorner(pc, pc).triangularView<Eigen::StrictlyUpper>() = A.topLeftCorner(pc, pc).transpose();
  rhs.head(pc) = C.transpose() * o;
  for (std::size_t j = 0; j < nl; ++j) {
    const int a = d_.g_year[j];
    const int b = d_.g_ind[j];
    if (a >= 0) {
      A.block(0, pc + a, pc, 1) += C.row(j).transpose();
      rhs(pc + a) += o(j);
    }
    if (b >= 0) {
      A.block(0, pc + ny + b, pc, 1) += C.row(j).transpose();
      rhs(pc + ny + b) += o(j);
    }
  }
  A.bottomLeftCorner(ny + ni, pc) = A.topRightCorner(pc, ny + ni).transpose();
  A.bottomRightCorner(ny + ni, ny + ni) = dd_;
  e.pi = A.ldlt().solve(rhs);

  e.nu = o - C * e.pi.head(pc);
  for (std::size_t j = 0; j < nl; ++j) {
    if (d_.g_year[j] >= 0) e.nu(j) -= e.pi(pc + d_.g_year[j]);
    if (d_.g_ind[j] >= 0) e.nu(j) -= e.pi(pc + ny + d_.g_ind[j]);
  }
  return e;
}

VectorXd MomentModel::moments(const VectorXd& theta) const {
  const auto e = evaluate(theta);
  VectorXd m = VectorXd::Zero(d_.Z.cols());
  for (std::size_t j = 0; j < d_.lagged.size(); ++j) m += d_.Z.row(d_.lagged[j]).transpose() * e.nu(j);
  return m / static_cast<double>(d_.lagged.size());
}

}  // namespace detail

namespace {

using detail::Design;
using detail::MomentModel;

std::vector<std::string> labels_for(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  for (const auto& n : names) {
    auto it = detail::label_map().find(n);
    out.push_back(it == detail::label_map().end() ? n : it->second);
  }
  return out;
}

VectorXd ols_start(const Design& d) {
  // y on [X, 1, dummies, free OP columns]
  const Eigen::Index q = d.X.cols();
  const Eigen::Index extra = 1 + static_cast<Eigen::Index>(d.year_names.size() + d.ind_names.size() +
                                                           d.free_l.size() + d.free_m.size());
  MatrixXd A(d.X.rows(), q + extra);
  A.leftCols(q) = d.X;
  Eigen::Index c = q;
  A.col(c++).setOnes();
  const Eigen::Index first_dummy = d.F.cols() - static_cast<Eigen::Index>(d.free_l.size() + d.free_m.size()) -
                                   static_cast<Eigen::Index>(d.year_names.size() + d.ind_names.size());
  for (std::size_t j = 0; j < d.year_names.size() + d.ind_names.size(); ++j) {
    A.col(c++) = d.F.col(first_dummy + static_cast<Eigen::Index>(j));
  }
  for (auto f : d.free_l) A.col(c++) = d.F.col(static_cast<Eigen::Index>(f));
  for (auto f : d.free_m) A.col(c++) = d.F.col(static_cast<Eigen::Index>(f));
  const VectorXd s = A.colwise().norm().cwiseMax(1e-300).cwiseInverse();
  const VectorXd b = (A * s.asDiagonal()).colPivHouseholderQr().solve(d.y);
  return (s.asDiagonal() * b).head(q);
}

struct Solution {
  VectorXd theta;
  double objective = 0;
  int iterations = 0;
  bool converged = false;
};

Solution solve_gmm(const MomentModel& model, const EstimationSpec& spec) {
  const Design& d = model.design();
  const Eigen::Index q = d.X.cols();
  MatrixXd Wroot = MatrixXd::Identity(q, q);

  auto run = [&](const std::vector<VectorXd>& starts) {
    const ResidualFunction residual = [&](const VectorXd& th) -> VectorXd {
      return Wroot.transpose() * model.moments(th);
    };
    const Objective objective = [&](const VectorXd& th) { return residual(th).squaredNorm(); };
    Solution best;
    best.objective = std::numeric_limits<double>::infinity();
    int total = 0;
    for (const auto& x0 : starts) {
      VectorXd x = x0;
      if (spec.nm_iterations > 0) {
        OptimizerOptions opt;
        opt.max_iterations = spec.nm_iterations;
        opt.tolerance = spec.tolerance;
        const auto nm = nelder_mead(objective, x, opt);
        total += nm.iterations;
        x = nm.x;
      }
      const auto lm = levenberg_marquardt(residual, x, 200);
      total += lm.iterations;
      if (lm.objective < best.objective) {
        best.theta = lm.x;
        best.objective = lm.objective;
      }
    }
    best.iterations = total;
    best.converged = std::isfinite(best.objective) && best.objective <= spec.tolerance;
    return best;
  };

  std::vector<VectorXd> starts;
  if (spec.start && spec.start->size() == q) {
    starts.push_back(*spec.start);
  } else {
    const VectorXd base = ols_start(d);
    starts.push_back(base);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> z(0.0, 1.0);
    for (int s = 1; s < spec.starts; ++s) {
      VectorXd x = base;
      for (Eigen::Index j = 0; j < q; ++j) x(j) += 0.1 * z(rng) * std::max(std::abs(base(j)), 0.05);
      starts.push_back(x);
    }
  }
  Solution sol = run(starts);

  if (spec.weighting == Weighting::kTwoStep && sol.converged) {
    const auto e = model.evaluate(sol.theta);
    MatrixXd S = MatrixXd::Zero(q, q);
    for (std::size_t j = 0; j < d.lagged.size(); ++j) {
      const VectorXd h = d.Z.row(d.lagged[j]).transpose() * e.nu(j);
      S += h * h.transpose();
    }
    S /= static_cast<double>(d.lagged.size());
    Eigen::LLT<MatrixXd> llt(S.inverse());
    if (llt.info() == Eigen::Success) {
      Wroot = llt.matrixL();
      const int it = sol.iterations;
      sol = run({sol.theta});
      sol.iterations += it;
    }
  }
  return sol;
}

EstimationResult assemble(const Panel& panel, const EstimationSpec& spec, const Design& d,
                          const detail::FirstFit& first, const MomentModel& model, const Solution& sol) {
  EstimationResult res;
  res.estimator = spec.estimator;
  res.group = spec.group;
  res.spillovers = spec.spillovers;
  res.objective = sol.objective;
  res.iterations = sol.iterations;
  res.converged = sol.converged;
  res.first_stage_r2 = first.r2;
  res.n_obs = d.rows.size();
  res.n_firms = d.n_clusters;
  res.n_lagged = d.lagged.size();
  res.dropped_zero_investment = d.dropped_zero_investment;
  res.zero_investment_share =
      d.candidates > 0 ? static_cast<double>(d.dropped_zero_investment) / static_cast<double>(d.candidates) : 0.0;

  const VectorXd& th = sol.theta;
  if (spec.estimator == EstimatorKind::kAcf) {
    res.names = d.theta_names;
    res.coef = th;
  } else {
    // l_plus = free l coefficient + k + r; l_plus0 = free l coefficient + k0.
    res.names = {"l_plus", "l_plus0"};
    res.names.insert(res.names.end(), d.theta_names.begin(), d.theta_names.end());
    res.coef.resize(static_cast<Eigen::Index>(res.names.size()));
    const auto idx = [&](const std::string& n) {
      return static_cast<Eigen::Index>(std::find(d.theta_names.begin(), d.theta_names.end(), n) -
                                       d.theta_names.begin());
    };
    res.coef(0) = first.gamma(static_cast<Eigen::Index>(d.free_l[0])) + th(idx("k")) + th(idx("r"));
    res.coef(1) = first.gamma(static_cast<Eigen::Index>(d.free_l[1])) + th(idx("k0"));
    res.coef.tail(th.size()) = th;
    res.extra_names = {"log(Material/Employees) x (1-D0)", "log(Material/Employees) x D0"};
    res.extra_coef.resize(2);
    res.extra_coef(0) = first.gamma(static_cast<Eigen::Index>(d.free_m[0]));
    res.extra_coef(1) = first.gamma(static_cast<Eigen::Index>(d.free_m[1]));
  }
  res.labels = labels_for(res.names);

  const auto e = model.evaluate(th);
  VectorXd omega = e.omega;
  const double beta = omega.mean();
  omega.array() -= beta;
  res.intercept = beta;
  const auto shift = std::find(d.theta_names.begin(), d.theta_names.end(), "d0_shift") - d.theta_names.begin();
  res.intercept0 = beta + th(shift);

  const std::size_t n = d.rows.size();
  res.firm_id.resize(n);
  res.year.resize(n);
  res.omega.resize(n);
  res.phi.resize(n);
  res.residual.assign(n, std::nan(""));
  res.has_lag.assign(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    res.firm_id[s] = panel[d.rows[s]].firm_id;
    res.year[s] = panel[d.rows[s]].year;
    res.omega[s] = omega(s);
    res.phi[s] = model.phi()(s);
  }
  for (std::size_t j = 0; j < d.lagged.size(); ++j) {
    res.residual[d.lagged[j]] = e.nu(j);
    res.has_lag[d.lagged[j]] = 1;
  }

  // g on the normalised omega, unstandardised lag.
  VectorXd w(d.lagged.size()), o(d.lagged.size());
  for (std::size_t j = 0; j < d.lagged.size(); ++j) {
    o(j) = omega(d.lagged[j]);
    w(j) = omega(d.lag[d.lagged[j]]);
  }
  const MatrixXd G = model.g_design(w);
  res.g_names = model.g_names();
  const VectorXd gs = G.colwise().norm().cwiseMax(1e-300).cwiseInverse();
  res.g_coef = gs.asDiagonal() * (G * gs.asDiagonal()).colPivHouseholderQr().solve(o);

  // Time and industry effects: omega on dummies.
  const std::size_t nd = d.year_names.size() + d.ind_names.size();
  res.dummy_names = d.year_names;
  res.dummy_names.insert(res.dummy_names.end(), d.ind_names.begin(), d.ind_names.end());
  if (nd > 0) {
    MatrixXd D = MatrixXd::Zero(n, nd + 1);
    D.col(0).setOnes();
    for (std::size_t s = 0; s < n; ++s) {
      if (d.year_idx[s] >= 0) D(s, 1 + d.year_idx[s]) = 1;
      if (d.ind_idx[s] >= 0) D(s, 1 + d.year_names.size() + d.ind_idx[s]) = 1;
    }
    res.dummy_coef = D.colPivHouseholderQr().solve(omega).tail(nd);
  } else {
    res.dummy_coef.resize(0);
  }

  res.instrument_names = d.z_names;
  res.moments = VectorXd::Zero(d.Z.cols());
  // Report moments on the unscaled instruments.
  for (Eigen::Index t = 0; t < d.Z.cols(); ++t) {
    double num = 0;
    for (std::size_t j = 0; j < d.lagged.size(); ++j) num += d.Z(d.lagged[j], t) * e.nu(j);
    res.moments(t) = num / static_cast<double>(d.lagged.size());
  }
  res.variance = MatrixXd::Zero(res.coef.size(), res.coef.size());
  return res;
}

EstimationResult run_two_step(const Panel& panel, const EstimationSpec& spec) {
  const Design d = detail::build_design(panel, spec);
  const auto first = detail::fit_first(d);
  const MomentModel model(d, first.phi, spec.g_degree);
  const Solution sol = solve_gmm(model, spec);
  if (!sol.converged) {
    throw ConvergenceError(fmt::format("second stage did not converge (objective {:.3g} after {} iterations)",
                                       sol.objective, sol.iterations),
                           sol.objective, sol.iterations);
  }
  return assemble(panel, spec, d, first, model, sol);
}

}  // namespace

FirstStageResult first_stage(const Panel& panel, const EstimationSpec& spec) {
  const Design d = detail::build_design(panel, spec);
  const auto f = detail::fit_first(d);
  FirstStageResult out;
  out.term_names = d.F_names;
  out.coef = f.gamma;
  out.fitted = f.fitted;
  out.phi = f.phi;
  out.residual = f.residual;
  out.r2 = f.r2;
  out.rows = d.rows;
  return out;
}

EstimationResult second_stage_gmm(const Panel& panel, const EstimationSpec& spec) {
  EstimationSpec s = spec;
  s.estimator = EstimatorKind::kAcf;
  return run_two_step(panel, s);
}

EstimationResult op_variant(const Panel& panel, const EstimationSpec& spec) {
  EstimationSpec s = spec;
  s.estimator = EstimatorKind::kOp;
  return run_two_step(panel, s);
}

EstimationResult estimate(const Panel& panel, const EstimationSpec& spec) {
  EstimationResult res = run_two_step(panel, spec);
  switch (spec.variance) {
    case VarianceMethod::kNone:
      break;
    case VarianceMethod::kAnalytic:
      res.variance = analytic_variance(panel, spec, res);
      res.variance_method = VarianceMethod::kAnalytic;
      break;
    case VarianceMethod::kBootstrap: {
      const auto b = bootstrap(panel, spec, res);
      res.variance = b.variance;
      res.variance_method = VarianceMethod::kBootstrap;
      res.bootstrap_replicates = b.replicates;
      res.bootstrap_failed = b.failed;
      break;
    }
  }
  return res;
}

WaldTest wald_equality(const EstimationResult& result, const std::string& coef_a, const std::string& coef_b) {
  return wald_equality(result.value(coef_a), result.value(coef_b), result.covariance(coef_a, coef_a),
                       result.covariance(coef_b, coef_b), result.covariance(coef_a, coef_b));
}

WaldTest wald_across(const EstimationResult& a, const EstimationResult& b, const std::string& coef) {
  return wald_equality(a.value(coef), b.value(coef), a.covariance(coef, coef), b.covariance(coef, coef), 0.0);
}

GroupSplitResult group_split_estimation(const Panel& panel, const EstimationSpec& spec, SplitKind kind) {
  GroupSplitResult out;
  out.kind = kind;
  if (kind == SplitKind::kHighTech) {
    EstimationSpec s = spec;
    s.hm_interaction = true;
    out.group_labels = {"pooled"};
    out.results.push_back(estimate(panel, s));
    if (s.variance != VarianceMethod::kNone) out.test = wald_equality(out.results.back(), "r_hm", "r_other");
    return out;
  }
  std::size_t entrants = 0, incumbents = 0;
  for (const auto& r : panel.records()) (r.age <= spec.max_entrant_age ? entrants : incumbents)++;
  if (entrants == 0 || incumbents == 0) {
    EstimationSpec s = spec;
    s.group = entrants == 0 ? SampleGroup::kIncumbents : SampleGroup::kEntrants;
    if (entrants == 0 && incumbents == 0) throw InsufficientDataError("panel is empty");
    out.group_labels = {std::string(to_string(s.group))};
    out.results.push_back(estimate(panel, s));
    out.notice = fmt::format("panel contains only {}; no cross-group test", to_string(s.group));
    return out;
  }
  for (auto g : {SampleGroup::kIncumbents, SampleGroup::kEntrants}) {
    EstimationSpec s = spec;
    s.group = g;
    out.group_labels.push_back(std::string(to_string(g)));
    out.results.push_back(estimate(panel, s));
  }
  if (spec.variance != VarianceMethod::kNone) out.test = wald_across(out.results[0], out.results[1], "r");
  return out;
}

}  // namespace innoprod
