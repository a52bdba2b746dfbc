#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace innoprod::testing {

FirmYear record(const std::string& firm, int year, double employees, double rnd, const std::string& county,
                const std::string& industry) {
  FirmYear r;
  r.firm_id = firm;
  r.year = year;
  r.employees = employees;
  r.rnd = rnd;
  r.d_zero_rnd = !(rnd > 0);
  r.county = county;
  r.industry = industry;
  r.deflator = 1.0;
  r.revenue = 100 * employees;
  r.value_added = 40 * employees;
  r.materials = 60 * employees;
  r.capital_book = 50 * employees;
  r.investment = 5 * employees;
  r.depreciation = 4 * employees;
  r.age = 10;
  return r;
}

std::pair<Panel, CountyDistanceMatrix> random_spillover_panel(std::mt19937_64& rng, int firms) {
  std::uniform_int_distribution<int> n_counties(1, 4);
  const int nc = n_counties(rng);
  std::vector<std::string> codes;
  for (int c = 0; c < nc; ++c) codes.push_back("C" + std::to_string(c));
  std::uniform_real_distribution<double> km(5.0, 300.0);
  std::vector<double> d(static_cast<std::size_t>(nc * nc), 0.0);
  for (int a = 0; a < nc; ++a) {
    for (int b = a + 1; b < nc; ++b) {
      const double v = km(rng);
      d[static_cast<std::size_t>(a * nc + b)] = v;
      d[static_cast<std::size_t>(b * nc + a)] = v;
    }
  }
  CountyDistanceMatrix dist(codes, d);
  std::uniform_int_distribution<int> county(0, nc - 1), industry(0, 2), years(1, 3), start(2004, 2006);
  std::uniform_real_distribution<double> emp(1.0, 200.0), rnd(0.0, 5000.0), coin(0.0, 1.0);
  std::vector<FirmYear> records;
  for (int f = 0; f < firms; ++f) {
    const std::string c = codes[static_cast<std::size_t>(county(rng))];
    const std::string ind = std::to_string(10 + industry(rng));
    const int y0 = start(rng);
    const int ny = years(rng);
    for (int t = 0; t < ny; ++t) {
      const double r = coin(rng) < 0.3 ? 0.0 : rnd(rng);
      records.push_back(record("f" + std::to_string(f), y0 + t, std::floor(emp(rng)), r, c, ind));
    }
  }
  return {Panel::from_records(std::move(records)), std::move(dist)};
}

std::pair<std::vector<double>, std::vector<double>> spillover_double_loop(const Panel& panel,
                                                                           const CountyDistanceMatrix& dist) {
  std::vector<double> intra(panel.size(), 0.0), inter(panel.size(), 0.0);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& a = panel[i];
    for (std::size_t j = 0; j < panel.size(); ++j) {
      const auto& b = panel[j];
      if (b.year != a.year || b.firm_id == a.firm_id) continue;
      const double w = a.county == b.county ? 1.0 : 1.0 / dist.distance(a.county, b.county);
      const double x = w * (b.rnd / b.employees);
      if (a.industry == b.industry) {
        intra[i] += x;
      } else {
        inter[i] += x;
      }
    }
  }
  return {intra, inter};
}

MatchSample random_match_sample(std::mt19937_64& rng, std::size_t n, int covariates) {
  MatchSample s;
  std::uniform_int_distribution<int> level(0, 3), year(0, 1), industry(0, 1), flag(0, 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  s.covariates.resize(static_cast<Eigen::Index>(n), covariates);
  s.outcome.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    s.rows.push_back(i);
    for (int c = 0; c < covariates; ++c) s.covariates(static_cast<Eigen::Index>(i), c) = level(rng);
    s.outcome(static_cast<Eigen::Index>(i)) = noise(rng);
    s.year.push_back(2010 + 2 * year(rng));
    s.industry.push_back(industry(rng) ? "20" : "10");
    s.prod.push_back(static_cast<std::uint8_t>(flag(rng)));
    s.proc.push_back(static_cast<std::uint8_t>(flag(rng)));
  }
  return s;
}

namespace {

double sd_two_pass(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

MatchingOracle matching_oracle(const MatchSample& sample, const std::vector<int>& label, const MatchConfig& cfg) {
  const std::size_t n = sample.size();
  const auto p = sample.covariates.cols();
  std::vector<double> w(static_cast<std::size_t>(p), 0.0);
  for (Eigen::Index c = 0; c < p; ++c) {
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) {
      if (label[i] >= 0) v.push_back(sample.covariates(static_cast<Eigen::Index>(i), c));
    }
    const double sd = v.size() > 1 ? sd_two_pass(v) : 0.0;
    w[static_cast<std::size_t>(c)] = sd > 0 ? 1.0 / sd : 0.0;
  }
  auto dist2 = [&](std::size_t i, std::size_t j) {
    double s = 0;
    for (Eigen::Index c = 0; c < p; ++c) {
      const double a = sample.covariates(static_cast<Eigen::Index>(i), c) * w[static_cast<std::size_t>(c)];
      const double b = sample.covariates(static_cast<Eigen::Index>(j), c) * w[static_cast<std::size_t>(c)];
      s += (a - b) * (a - b);
    }
    return s;
  };
  auto same_cell = [&](std::size_t i, std::size_t j) {
    return sample.year[i] == sample.year[j] &&
           (cfg.exact == ExactMatch::kYear || sample.industry[i] == sample.industry[j]);
  };
  auto ranked = [&](std::size_t i, int group) {
    std::vector<std::size_t> c;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i && label[j] == group && same_cell(i, j)) c.push_back(j);
    }
    std::stable_sort(c.begin(), c.end(), [&](std::size_t a, std::size_t b) { return dist2(i, a) < dist2(i, b); });
    return c;
  };

  MatchingOracle out;
  out.matched.resize(n);
  std::vector<std::size_t> units;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] < 0) continue;
    auto other = ranked(i, 1 - label[i]);
    if (other.empty()) continue;
    units.push_back(i);
    if (label[i] == 1) ++out.matches;
    other.resize(std::min(other.size(), static_cast<std::size_t>(cfg.neighbors)));
    out.matched[i] = other;
  }
  out.units = units.size();
  if (units.empty()) return out;

  const auto& y = sample.outcome;
  std::vector<double> tau;
  std::vector<double> used(n, 0.0);
  for (auto i : units) {
    double other = 0;
    for (auto j : out.matched[i]) {
      other += y(static_cast<Eigen::Index>(j));
      used[j] += 1.0 / static_cast<double>(out.matched[i].size());
    }
    other /= static_cast<double>(out.matched[i].size());
    const double yi = y(static_cast<Eigen::Index>(i));
    tau.push_back(label[i] == 1 ? yi - other : other - yi);
  }
  const double N = static_cast<double>(units.size());
  out.estimate = std::accumulate(tau.begin(), tau.end(), 0.0) / N;
  const double M = cfg.neighbors;
  double v = 0;
  for (std::size_t u = 0; u < units.size(); ++u) {
    const auto i = units[u];
    auto own = ranked(i, label[i]);
    double s2 = 0;
    if (!own.empty()) {
      own.resize(std::min<std::size_t>(own.size(), 2));
      double avg = 0;
      for (auto j : own) avg += y(static_cast<Eigen::Index>(j));
      avg /= static_cast<double>(own.size());
      const double J = static_cast<double>(own.size());
      s2 = J / (J + 1) * (y(static_cast<Eigen::Index>(i)) - avg) * (y(static_cast<Eigen::Index>(i)) - avg);
    }
    const double km = used[i];
    v += (tau[u] - out.estimate) * (tau[u] - out.estimate) + (km * km + (2 * M - 1) / M * km) * s2;
  }
  out.se = std::sqrt(v) / N;
  return out;
}

double chi2_1_upper(double c) { return std::erfc(std::sqrt(c / 2.0)); }

}  // namespace innoprod::testing
