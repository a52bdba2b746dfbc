#include "innoprod/mcsim.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>

#include "innoprod/csv.hpp"
#include "innoprod/error.hpp"
#include "innoprod/spillover.hpp"

namespace innoprod {

namespace {

struct DoubleField {
  const char* key;
  double DgpConfig::*member;
};

struct IntField {
  const char* key;
  int DgpConfig::*member;
};

const std::vector<DoubleField>& double_fields() {
  static const std::vector<DoubleField> fields{
      {"entrant_share", &DgpConfig::entrant_share},
      {"intercept", &DgpConfig::intercept},
      {"d0_shift", &DgpConfig::d0_shift},
      {"beta_l", &DgpConfig::beta_l},
      {"beta_l0", &DgpConfig::beta_l0},
      {"beta_k", &DgpConfig::beta_k},
      {"beta_k0", &DgpConfig::beta_k0},
      {"beta_r", &DgpConfig::beta_r},
      {"beta_r_entrant_shift", &DgpConfig::beta_r_entrant_shift},
      {"beta_r_hm_shift", &DgpConfig::beta_r_hm_shift},
      {"e_intra", &DgpConfig::e_intra},
      {"e_intra0", &DgpConfig::e_intra0},
      {"e_inter", &DgpConfig::e_inter},
      {"e_inter0", &DgpConfig::e_inter0},
      {"beta_age", &DgpConfig::beta_age},
      {"beta_north", &DgpConfig::beta_north},
      {"industry_tfp_sigma", &DgpConfig::industry_tfp_sigma},
      {"beta_m", &DgpConfig::beta_m},
      {"cd_beta_m", &DgpConfig::cd_beta_m},
      {"materials_share", &DgpConfig::materials_share},
      {"rho", &DgpConfig::rho},
      {"delta_d", &DgpConfig::delta_d},
      {"delta_c", &DgpConfig::delta_c},
      {"delta_dc", &DgpConfig::delta_dc},
      {"sigma_xi", &DgpConfig::sigma_xi},
      {"sigma_eps", &DgpConfig::sigma_eps},
      {"rnd_rate", &DgpConfig::rnd_rate},
      {"innov_rate", &DgpConfig::innov_rate},
      {"rnd_omega_slope", &DgpConfig::rnd_omega_slope},
      {"innov_omega_slope", &DgpConfig::innov_omega_slope},
      {"innov_rnd_slope", &DgpConfig::innov_rnd_slope},
      {"proc_offset", &DgpConfig::proc_offset},
      {"labor_const", &DgpConfig::labor_const},
      {"labor_omega", &DgpConfig::labor_omega},
      {"labor_rho", &DgpConfig::labor_rho},
      {"labor_sigma", &DgpConfig::labor_sigma},
      {"industry_sigma", &DgpConfig::industry_sigma},
      {"capital_per_worker", &DgpConfig::capital_per_worker},
      {"invest_omega", &DgpConfig::invest_omega},
      {"invest_sigma", &DgpConfig::invest_sigma},
      {"life_min", &DgpConfig::life_min},
      {"life_max", &DgpConfig::life_max},
      {"rnd_const", &DgpConfig::rnd_const},
      {"rnd_omega", &DgpConfig::rnd_omega},
      {"rnd_sigma", &DgpConfig::rnd_sigma},
      {"invest_const", &DgpConfig::invest_const},
      {"invest_age", &DgpConfig::invest_age},
      {"materials_sigma", &DgpConfig::materials_sigma},
      {"deflator_drift", &DgpConfig::deflator_drift},
      {"deflator_sigma", &DgpConfig::deflator_sigma},
  };
  return fields;
}

const std::vector<IntField>& int_fields() {
  static const std::vector<IntField> fields{
      {"n_firms", &DgpConfig::n_firms},           {"waves", &DgpConfig::waves},
      {"first_year", &DgpConfig::first_year},     {"wave_spacing", &DgpConfig::wave_spacing},
      {"n_counties", &DgpConfig::n_counties},
  };
  return fields;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// E[f(omega)] for omega ~ N(0, sd^2), composite Simpson on [-8, 8] sd.
double normal_expectation(double sd, const std::function<double(double)>& f) {
  if (!(sd > 0)) return f(0.0);
  constexpr int kIntervals = 1600;
  const double a = -8.0, b = 8.0, h = (b - a) / kIntervals;
  double sum = 0;
  for (int i = 0; i <= kIntervals; ++i) {
    const double z = a + i * h;
    const double w = (i == 0 || i == kIntervals) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    sum += w * f(sd * z) * std::exp(-0.5 * z * z);
  }
  return sum * h / 3.0 / std::sqrt(2.0 * M_PI);
}

double bisect(const std::function<double(double)>& f, double target) {
  double lo = -30, hi = 30;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

const std::vector<std::string>& industries() {
  static const std::vector<std::string> codes{"10", "16", "20", "22", "25", "26", "28", "31", "46", "62"};
  return codes;
}

}  // namespace

void DgpConfig::validate() const {
  std::vector<std::string> bad;
  if (n_firms < 2) bad.push_back("n_firms");
  if (waves < 2) bad.push_back("waves");
  if (wave_spacing < 1) bad.push_back("wave_spacing");
  if (!(entrant_share >= 0 && entrant_share < 1)) bad.push_back("entrant_share");
  if (n_counties < 2) bad.push_back("n_counties");
  if (!(rho > 0 && rho < 1)) bad.push_back("rho");
  if (!(sigma_xi >= 0)) bad.push_back("sigma_xi");
  if (!(sigma_eps >= 0)) bad.push_back("sigma_eps");
  if (!(beta_m > 1)) bad.push_back("beta_m");
  if (!(cd_beta_m > 0 && cd_beta_m < 1)) bad.push_back("cd_beta_m");
  if (!(materials_share > 0 && materials_share < 1)) bad.push_back("materials_share");
  if (!(rnd_rate > 0 && rnd_rate < 1)) bad.push_back("rnd_rate");
  if (!(innov_rate > 0 && innov_rate < 1)) bad.push_back("innov_rate");
  if (!(labor_rho >= 0 && labor_rho < 1)) bad.push_back("labor_rho");
  if (!(labor_sigma >= 0 && industry_sigma >= 0 && industry_tfp_sigma >= 0 && invest_sigma >= 0 && rnd_sigma >= 0 && materials_sigma >= 0 &&
        deflator_sigma >= 0)) {
    bad.push_back("policy noise");
  }
  if (!(life_min > 2 && life_max >= life_min)) bad.push_back("life_min/life_max");
  if (!bad.empty()) {
    throw ValidationError(fmt::format("invalid simulation settings: {}", fmt::join(bad, ", ")), bad);
  }
}

DgpConfig DgpConfig::from_config(const KeyValueConfig& cfg) {
  std::set<std::string> known{"mode", "seed"};
  for (const auto& f : double_fields()) known.insert(f.key);
  for (const auto& f : int_fields()) known.insert(f.key);
  cfg.require_known(known, "simulation config");
  DgpConfig c;
  const auto mode = cfg.get_string("mode", "leontief");
  if (mode == "leontief") {
    c.mode = DgpMode::kLeontief;
  } else if (mode == "cobb_douglas") {
    c.mode = DgpMode::kCobbDouglas;
  } else {
    throw ValidationError("unknown simulation mode '" + mode + "' (leontief, cobb_douglas)");
  }
  for (const auto& f : double_fields()) c.*f.member = cfg.get_double(f.key, c.*f.member);
  for (const auto& f : int_fields()) c.*f.member = static_cast<int>(cfg.get_int(f.key, c.*f.member));
  c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
  c.validate();
  return c;
}

KeyValueConfig DgpConfig::to_config() const {
  KeyValueConfig cfg;
  cfg.set("mode", mode == DgpMode::kLeontief ? "leontief" : "cobb_douglas");
  for (const auto& f : double_fields()) cfg.set(f.key, csv::format_double(this->*f.member));
  for (const auto& f : int_fields()) cfg.set(f.key, std::to_string(this->*f.member));
  cfg.set("seed", std::to_string(seed));
  return cfg;
}

DgpCalibration calibrate(const DgpConfig& cfg) {
  DgpCalibration cal;
  cal.omega_sd = cfg.sigma_xi / std::sqrt(1.0 - cfg.rho * cfg.rho);
  const double sd = cal.omega_sd;
  cal.rnd_intercept = bisect(
      [&](double a) {
        return normal_expectation(sd, [&](double w) { return logistic(a + cfg.rnd_omega_slope * w); });
      },
      cfg.rnd_rate);
  const double ad = cal.rnd_intercept;
  auto innov_terms = [&](double a, double w, const std::function<double(double, double)>& f) {
    const double pr = logistic(ad + cfg.rnd_omega_slope * w);
    double out = 0;
    for (int d = 0; d <= 1; ++d) {
      const double pd = logistic(a + cfg.innov_omega_slope * w + cfg.innov_rnd_slope * d);
      const double pc = logistic(a + cfg.proc_offset + cfg.innov_omega_slope * w + cfg.innov_rnd_slope * d);
      out += (d ? pr : 1 - pr) * f(pd, pc);
    }
    return out;
  };
  cal.innov_intercept = bisect(
      [&](double a) {
        return normal_expectation(
            sd, [&](double w) { return innov_terms(a, w, [](double pd, double pc) { return 1 - (1 - pd) * (1 - pc); }); });
      },
      cfg.innov_rate);
  const double ai = cal.innov_intercept;
  cal.omega_const = -normal_expectation(sd, [&](double w) {
    return innov_terms(ai, w, [&](double pd, double pc) {
      return cfg.delta_d * pd + cfg.delta_c * pc + cfg.delta_dc * pd * pc;
    });
  });
  return cal;
}

double GroundTruth::value(const std::string& name) const {
  auto it = parameters.find(name);
  if (it == parameters.end()) throw LookupError("ground truth has no parameter " + name);
  return it->second;
}

Simulation generate_panel(const DgpConfig& cfg) {
  cfg.validate();
  const bool leontief = cfg.mode == DgpMode::kLeontief;
  const DgpCalibration cal = calibrate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> N01(0.0, 1.0);
  std::uniform_real_distribution<double> U01(0.0, 1.0);
  auto bern = [&](double p) { return U01(rng) < p; };

  // Geography.
  const auto nc = static_cast<std::size_t>(cfg.n_counties);
  std::vector<std::string> counties(nc);
  std::vector<double> cx(nc), cy(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    counties[c] = fmt::format("C{:02d}", c + 1);
    cx[c] = 250.0 * U01(rng);
    cy[c] = 150.0 * U01(rng);
  }
  std::vector<double> dist(nc * nc, 0.0);
  for (std::size_t a = 0; a < nc; ++a) {
    for (std::size_t b = a + 1; b < nc; ++b) {
      const double d = std::max(1.0, std::hypot(cx[a] - cx[b], cy[a] - cy[b]));
      dist[a * nc + b] = dist[b * nc + a] = d;
    }
  }
  auto sorted_y = cy;
  std::sort(sorted_y.begin(), sorted_y.end());
  const double north_cut = sorted_y[nc / 2];
  auto distances = std::make_shared<const CountyDistanceMatrix>(counties, dist);

  // Industry effects and deflators.
  const auto& inds = industries();
  std::vector<double> ind_effect(inds.size()), ind_tfp(inds.size());
  for (auto& f : ind_effect) f = cfg.industry_sigma * N01(rng);
  for (auto& f : ind_tfp) f = cfg.industry_tfp_sigma * N01(rng);
  const auto T = static_cast<std::size_t>(cfg.waves);
  std::vector<std::vector<double>> price(inds.size(), std::vector<double>(T + 1, 1.0));
  for (auto& p : price) {
    for (std::size_t t = 1; t <= T; ++t) {
      p[t] = p[t - 1] * std::exp(cfg.deflator_drift * cfg.wave_spacing + cfg.deflator_sigma * N01(rng));
    }
  }

  struct State {
    std::size_t industry;
    double omega, xi, g, effect;
    double l, u, logr, capital;
    bool d_rnd, pd, pc;
  };
  std::vector<FirmYear> records;
  std::vector<State> states;
  const double sd = cal.omega_sd;
  const double su = cfg.labor_sigma / std::sqrt(1.0 - cfg.labor_rho * cfg.labor_rho);

  for (int f = 0; f < cfg.n_firms; ++f) {
    const bool entrant = bern(cfg.entrant_share);
    const auto j = static_cast<std::size_t>(U01(rng) * static_cast<double>(inds.size())) % inds.size();
    const auto c = static_cast<std::size_t>(U01(rng) * static_cast<double>(nc)) % nc;
    const double life = cfg.life_min + (cfg.life_max - cfg.life_min) * U01(rng);
    const std::size_t start =
        entrant ? 1 + static_cast<std::size_t>(U01(rng) * static_cast<double>(T - 2)) % std::max<std::size_t>(T - 2, 1)
                : 0;
    int age = entrant ? static_cast<int>(U01(rng) * 3.0) : 9 + static_cast<int>(U01(rng) * 32.0);
    age = std::min(age, entrant ? 2 : 40);

    // Pre-sample state.
    double omega_p = sd * N01(rng);
    double u_p = su * N01(rng);
    double l_p = std::log(std::round(1.0 + std::exp(cfg.labor_const + cfg.labor_omega * omega_p + u_p + ind_effect[j])));
    double k_p = leontief ? std::exp(l_p + cfg.capital_per_worker + 0.5 * N01(rng))
                          : std::exp(cfg.invest_const + 0.5 * N01(rng)) * (life - 2.0) / 2.0;
    double gk_p = k_p;
    double price_p = price[j][start];

    for (std::size_t t = start; t < T; ++t) {
      State s{};
      s.industry = j;
      s.d_rnd = bern(logistic(cal.rnd_intercept + cfg.rnd_omega_slope * omega_p));
      s.logr = s.d_rnd ? cfg.rnd_const + l_p + cfg.rnd_omega * omega_p + cfg.rnd_sigma * N01(rng) : 0.0;
      const double base = cal.innov_intercept + cfg.innov_omega_slope * omega_p + cfg.innov_rnd_slope * s.d_rnd;
      s.pd = bern(logistic(base));
      s.pc = bern(logistic(base + cfg.proc_offset));
      s.effect = cfg.delta_d * s.pd + cfg.delta_c * s.pc + cfg.delta_dc * (s.pd && s.pc);
      s.g = cal.omega_const + cfg.rho * omega_p + s.effect;
      s.xi = cfg.sigma_xi * N01(rng);
      s.omega = s.g + s.xi;

      s.u = cfg.labor_rho * u_p + cfg.labor_sigma * N01(rng);
      const double L = std::round(1.0 + std::exp(cfg.labor_const + cfg.labor_omega * s.omega + s.u + ind_effect[j]));
      s.l = std::log(L);

      const double p_t = price[j][t];
      double invest;
      if (leontief) {
        const double v = cfg.invest_sigma * N01(rng);
        invest = k_p * 2.0 / (life - 2.0) *
                 std::exp(cfg.invest_omega * omega_p + v - 0.5 * cfg.invest_sigma * cfg.invest_sigma);
      } else {
        invest = std::exp(cfg.invest_const + cfg.invest_omega * s.omega + cfg.invest_age * age);
      }
      double capital, gk, depreciation;
      if (t == start) {
        capital = (k_p * p_t / price_p + invest) * (1.0 - 2.0 / life);
        gk = capital;
        depreciation = gk / life;
      } else {
        capital = (k_p * p_t / price_p + invest) * (1.0 - 2.0 / life);
        depreciation = (gk_p + invest) / life;
        gk = gk_p + invest - depreciation;
      }
      s.capital = capital;

      FirmYear r;
      r.firm_id = std::to_string(f + 1);
      r.year = cfg.first_year + static_cast<int>(t) * cfg.wave_spacing;
      r.employees = L;
      r.capital_book = gk;
      r.investment = invest;
      r.depreciation = depreciation;
      r.rnd = s.d_rnd ? std::exp(s.logr) : 0.0;
      r.d_zero_rnd = !s.d_rnd;
      r.prod_innov = s.pd;
      r.proc_innov = s.pc;
      r.innovator = s.pd || s.pc;
      r.county = counties[c];
      r.industry = inds[j];
      r.tech_class = tech_class_for_industry(inds[j]);
      r.age = age;
      r.north = cy[c] > north_cut;
      r.deflator = p_t;
      records.push_back(std::move(r));
      states.push_back(s);

      omega_p = s.omega;
      u_p = s.u;
      l_p = s.l;
      k_p = capital;
      gk_p = gk;
      price_p = p_t;
      age += cfg.wave_spacing;
    }
  }

  // Spillovers need every firm's R&D intensity for the year.
  Panel draft = Panel::from_records(records, cfg.wave_spacing, distances);
  const auto spill = compute_spillovers(draft, *distances);
  // from_records keeps firm-major generation order because ids are numeric
  // and increasing, so positions line up with `records`.
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (draft[i].firm_id != records[i].firm_id || draft[i].year != records[i].year) {
      throw IntegrityError("simulation record order mismatch");
    }
  }

  GroundTruth truth;
  truth.config = cfg;
  truth.calibration = cal;
  const std::size_t n = records.size();
  truth.firm_id.resize(n);
  truth.year.resize(n);
  truth.omega.resize(n);
  truth.xi.resize(n);
  truth.eps.resize(n);
  truth.g.resize(n);
  truth.log_q.resize(n);
  truth.effect.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    auto& r = records[i];
    const auto& s = states[i];
    const double e1 = std::log1p(spill.intra[i]);
    const double e2 = std::log1p(spill.inter[i]);
    const double eps = cfg.sigma_eps * N01(rng);
    const bool d0 = r.d_zero_rnd;
    double beta_r = cfg.beta_r;
    if (r.age <= 8) beta_r += cfg.beta_r_entrant_shift;
    if (is_high_or_medium_high(r.tech_class)) beta_r += cfg.beta_r_hm_shift;
    const double logk = std::log(s.capital);
    const double common =
        cfg.beta_age * r.age + cfg.beta_north * (r.north ? 1.0 : 0.0) + ind_tfp[s.industry] + s.omega;
    if (leontief) {
      const double k = logk - s.l;
      const double rr = s.logr - s.l;
      double y;
      if (!d0) {
        y = cfg.intercept + (cfg.beta_l + cfg.beta_k + cfg.beta_r - 1.0) * s.l + cfg.beta_k * k + beta_r * rr +
            cfg.e_intra * e1 + cfg.e_inter * e2;
      } else {
        y = cfg.intercept + cfg.d0_shift + (cfg.beta_l0 + cfg.beta_k0 - 1.0) * s.l + cfg.beta_k0 * k +
            cfg.e_intra0 * e1 + cfg.e_inter0 * e2;
      }
      y += common;
      const double log_q = y + s.l - std::log(1.0 - 1.0 / cfg.beta_m);
      const double va = r.employees * std::exp(y + eps);
      const double m = std::exp(log_q) / cfg.beta_m;
      r.value_added = va;
      r.materials = m;
      r.revenue = m + va;
      truth.log_q[i] = log_q;
    } else {
      double a;
      if (!d0) {
        a = cfg.intercept + cfg.beta_l * s.l + cfg.beta_k * logk + beta_r * s.logr + cfg.e_intra * e1 +
            cfg.e_inter * e2;
      } else {
        a = cfg.intercept + cfg.d0_shift + cfg.beta_l0 * s.l + cfg.beta_k0 * logk + cfg.e_intra0 * e1 +
            cfg.e_inter0 * e2;
      }
      a += common;
      const double eta = cfg.materials_sigma * N01(rng);
      const double logm = (std::log(cfg.materials_share) + a + eta) / (1.0 - cfg.cd_beta_m);
      const double log_q = a + cfg.cd_beta_m * logm;
      r.materials = std::exp(logm);
      r.revenue = std::exp(log_q + eps);
      r.value_added = r.revenue - r.materials;
      truth.log_q[i] = log_q;
    }
    truth.firm_id[i] = r.firm_id;
    truth.year[i] = r.year;
    truth.omega[i] = s.omega;
    truth.xi[i] = s.xi;
    truth.eps[i] = eps;
    truth.g[i] = s.g;
    truth.effect[i] = s.effect;
  }

  auto& p = truth.parameters;
  const double mshare = leontief ? 0.0 : cfg.cd_beta_m;
  p["l_plus"] = cfg.beta_l + mshare + cfg.beta_k + cfg.beta_r - 1.0;
  p["l_plus0"] = cfg.beta_l0 + mshare + cfg.beta_k0 - 1.0;
  p["k"] = cfg.beta_k;
  p["k0"] = cfg.beta_k0;
  p["r"] = cfg.beta_r;
  p["r_hm"] = cfg.beta_r + cfg.beta_r_hm_shift;
  p["r_other"] = cfg.beta_r;
  p["d0_shift"] = cfg.d0_shift;
  p["e_intra"] = cfg.e_intra;
  p["e_intra0"] = cfg.e_intra0;
  p["e_inter"] = cfg.e_inter;
  p["e_inter0"] = cfg.e_inter0;
  p["age"] = cfg.beta_age;
  p["north"] = cfg.beta_north;
  if (!leontief) p["m"] = cfg.cd_beta_m;
  p["rho"] = cfg.rho;
  p["delta_d"] = cfg.delta_d;
  p["delta_c"] = cfg.delta_c;
  p["delta_dc"] = cfg.delta_dc;
  p["d10"] = cfg.delta_d;
  p["d01"] = cfg.delta_c;
  p["d11"] = cfg.delta_d + cfg.delta_c + cfg.delta_dc;
  p["gap"] = cfg.delta_dc;
  double sum = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (records[i].prod_innov || records[i].proc_innov) {
      sum += truth.effect[i];
      ++count;
    }
  }
  p["delta"] = count > 0 ? sum / static_cast<double>(count) : 0.0;

  Simulation sim;
  sim.panel = Panel::from_records(std::move(records), cfg.wave_spacing, distances);
  sim.distances = distances;
  sim.truth = std::move(truth);
  return sim;
}

void write_truth(const GroundTruth& truth, const std::string& stem) {
  KeyValueConfig kv = truth.config.to_config();
  for (const auto& [k, v] : truth.parameters) kv.set("truth." + k, csv::format_double(v));
  kv.set("calibration.rnd_intercept", csv::format_double(truth.calibration.rnd_intercept));
  kv.set("calibration.innov_intercept", csv::format_double(truth.calibration.innov_intercept));
  kv.set("calibration.omega_const", csv::format_double(truth.calibration.omega_const));
  kv.set("calibration.omega_sd", csv::format_double(truth.calibration.omega_sd));
  {
    std::ofstream out(stem + ".txt");
    if (!out) throw Error("cannot write " + stem + ".txt");
    out << kv.canonical();
  }
  csv::Table t{{"firm_id", "year", "omega", "xi", "eps", "g", "log_q", "effect"}, {}};
  for (std::size_t i = 0; i < truth.firm_id.size(); ++i) {
    t.rows.push_back({truth.firm_id[i], std::to_string(truth.year[i]), csv::format_double(truth.omega[i]),
                      csv::format_double(truth.xi[i]), csv::format_double(truth.eps[i]), csv::format_double(truth.g[i]),
                      csv::format_double(truth.log_q[i]), csv::format_double(truth.effect[i])});
  }
  csv::write_file(stem + "_rows.csv", t);
}

GroundTruth read_truth(const std::string& stem) {
  const auto kv = KeyValueConfig::load(stem + ".txt");
  KeyValueConfig cfg;
  GroundTruth truth;
  for (const auto& [k, v] : kv.values()) {
    if (k.rfind("truth.", 0) == 0) {
      truth.parameters[k.substr(6)] = kv.get_double(k);
    } else if (k.rfind("calibration.", 0) == 0) {
      continue;
    } else {
      cfg.set(k, v);
    }
  }
  truth.config = DgpConfig::from_config(cfg);
  truth.calibration.rnd_intercept = kv.get_double("calibration.rnd_intercept");
  truth.calibration.innov_intercept = kv.get_double("calibration.innov_intercept");
  truth.calibration.omega_const = kv.get_double("calibration.omega_const");
  truth.calibration.omega_sd = kv.get_double("calibration.omega_sd");
  const auto t = csv::read_file(stem + "_rows.csv");
  const auto col = [&](const char* name) {
    auto c = t.column(name);
    if (!c) throw SchemaError(fmt::format("truth rows lack column {}", name));
    return *c;
  };
  const std::size_t cf = col("firm_id"), cy = col("year"), co = col("omega"), cx = col("xi"), ce = col("eps"),
                    cg = col("g"), cq = col("log_q"), cd = col("effect");
  for (const auto& row : t.rows) {
    truth.firm_id.push_back(row[cf]);
    truth.year.push_back(static_cast<int>(*csv::parse_int(row[cy])));
    truth.omega.push_back(*csv::parse_double(row[co]));
    truth.xi.push_back(*csv::parse_double(row[cx]));
    truth.eps.push_back(*csv::parse_double(row[ce]));
    truth.g.push_back(*csv::parse_double(row[cg]));
    truth.log_q.push_back(*csv::parse_double(row[cq]));
    truth.effect.push_back(*csv::parse_double(row[cd]));
  }
  return truth;
}

}  // namespace innoprod
