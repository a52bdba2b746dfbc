// Acceptance suite: one PASS/FAIL line per criterion.
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "cli.hpp"
#include "innoprod/capital.hpp"
#include "innoprod/error.hpp"
#include "innoprod/oracle.hpp"
#include "innoprod/spillover.hpp"
#include "innoprod/stats.hpp"
#include "oracles.hpp"

using namespace innoprod;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

StudyOptions base_study(int firms, int reps, std::uint64_t seed) {
  StudyOptions o;
  o.dgp.n_firms = firms;
  o.spec.variance = VarianceMethod::kAnalytic;
  o.spec.starts = 1;
  o.replications = reps;
  o.seed = seed;
  return o;
}

std::vector<Replication> run_study(const StudyOptions& o, std::size_t& failures) {
  std::vector<Replication> out;
  failures = 0;
  for (int r = 0; r < o.replications; ++r) {
    auto rep = run_replication(o, r);
    if (!rep.error.empty()) {
      ++failures;
      spdlog::warn("replication {} failed: {}", r, rep.error);
      continue;
    }
    out.push_back(std::move(rep));
  }
  return out;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::size_t failed = 0;
  const auto reps = run_study(base_study(1000, 50, 10'000), failed);
  const double elapsed = seconds_since(t0);
  double mae_k = 0, mae_r = 0, mean_k = 0, mean_r = 0;
  for (const auto& rep : reps) {
    const double ek = rep.result->value("k") - rep.truth.at("k");
    const double er = rep.result->value("r") - rep.truth.at("r");
    mae_k += std::abs(ek);
    mae_r += std::abs(er);
    mean_k += ek;
    mean_r += er;
  }
  const double n = static_cast<double>(reps.size());
  mae_k /= n;
  mae_r /= n;
  mean_k /= n;
  mean_r /= n;
  Outcome o;
  o.pass = failed == 0 && reps.size() == 50 && mae_k <= 0.03 && mae_r <= 0.03 && std::abs(mean_k) <= 0.03 &&
           std::abs(mean_r) <= 0.03 && elapsed <= 600;
  o.detail = fmt::format("50 reps N=1000: k bias {:+.4f} mean|err| {:.4f}; r bias {:+.4f} mean|err| {:.4f}; "
                         "{} failed; budget 600s",
                         mean_k, mae_k, mean_r, mae_r, failed);
  return o;
}

double wald_rejection(const std::vector<Replication>& reps) {
  int rej = 0;
  for (const auto& rep : reps) rej += wald_equality(*rep.result, "k", "k0").p_value < 0.05;
  return static_cast<double>(rej) / static_cast<double>(reps.size());
}

Outcome criterion2() {
  auto null = base_study(1000, 200, 20'000);
  null.dgp.beta_k0 = null.dgp.beta_k;
  null.dgp.beta_l0 = null.dgp.beta_l;
  std::size_t f1 = 0, f2 = 0;
  const auto size_reps = run_study(null, f1);
  const double size = wald_rejection(size_reps);
  auto alt = base_study(2000, 50, 30'000);
  alt.dgp.beta_k0 = alt.dgp.beta_k - 0.05;
  const auto power_reps = run_study(alt, f2);
  const double power = wald_rejection(power_reps);
  Outcome o;
  o.pass = f1 == 0 && f2 == 0 && size >= 0.02 && size <= 0.10 && power >= 0.8;
  o.detail = fmt::format("size {:.3f} over {} reps (N=1000); power {:.3f} over {} reps (N=2000, gap 0.05)", size,
                         size_reps.size(), power, power_reps.size());
  return o;
}

StudyOptions effect_study(int reps, std::uint64_t seed) {
  auto o = base_study(2000, reps, seed);
  o.spec.variance = VarianceMethod::kNone;
  o.effects = true;
  return o;
}

Outcome criterion3() {
  // Every innovation type shifts g by 0.2.
  auto s = effect_study(50, 40'000);
  s.dgp.delta_d = 0.2;
  s.dgp.delta_c = 0.2;
  s.dgp.delta_dc = -0.2;
  std::size_t failed = 0;
  const auto reps = run_study(s, failed);
  double bias = 0;
  for (const auto& rep : reps) bias += rep.effects->delta.estimate - 0.2;
  bias /= static_cast<double>(reps.size());

  DgpConfig dgp = s.dgp;
  dgp.seed = s.seed;
  const auto panel = prepare_panel(generate_panel(dgp));
  auto spec = s.spec;
  const auto result = estimate(panel, spec);
  const auto sample = build_match_sample(residual_tfp(panel, result), panel);
  const auto draws = placebo_ates(sample, MatchConfig{}, 100, 7);
  const double m = mean(draws);
  const double mcse = sample_sd(draws) / std::sqrt(static_cast<double>(draws.size()));

  Outcome o;
  o.pass = failed == 0 && std::abs(bias) <= 0.05 && std::abs(m) <= 2 * mcse;
  o.detail = fmt::format("delta bias {:+.4f} over {} reps (N=2000); placebo mean {:+.5f}, MC SE {:.5f}", bias,
                         reps.size(), m, mcse);
  return o;
}

Outcome criterion4() {
  auto comp = effect_study(50, 50'000);
  comp.dgp.delta_dc = 0.1;
  auto none = effect_study(50, 60'000);
  none.dgp.delta_dc = 0.0;
  std::size_t f1 = 0, f2 = 0;
  auto rate = [](const std::vector<Replication>& reps) {
    int c = 0;
    for (const auto& rep : reps) c += rep.complementarity->complementary;
    return static_cast<double>(c) / static_cast<double>(reps.size());
  };
  const auto a = run_study(comp, f1);
  const auto b = run_study(none, f2);
  const double power = rate(a), size = rate(b);
  Outcome o;
  o.pass = f1 == 0 && f2 == 0 && power >= 0.8 && size <= 0.10;
  o.detail = fmt::format("complementary verdicts: {:.2f} with interaction 0.1, {:.2f} without (50 reps each, N=2000)",
                         power, size);
  return o;
}

Outcome criterion5() {
  std::mt19937_64 rng(555);
  int spill_bad = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const auto [panel, dist] = innoprod::testing::random_spillover_panel(rng, 2 + rep % 12);
    const auto m = compute_spillovers(panel, dist);
    const auto [intra, inter] = innoprod::testing::spillover_double_loop(panel, dist);
    spill_bad += !(m.intra == intra && m.inter == inter);
  }

  auto wave = [](int year, double book, double invest, double depr, double deflator) {
    FirmYear r = innoprod::testing::record("1", year);
    r.capital_book = book;
    r.investment = invest;
    r.depreciation = depr;
    r.deflator = deflator;
    return r;
  };
  const std::vector<FirmYear> a{wave(2004, 1000, 0, 0, 1.0), wave(2005, 900, 0, 100, 1.0)};
  const std::vector<FirmYear> b{wave(2004, 1000, 0, 0, 2.0), wave(2005, 1000, 100, 55, 2.1)};
  const double e800 = std::abs(pim_series(a, 1).capital[1] - 800.0) / 800.0;
  const double e1035 = std::abs(pim_series(b, 1).capital[1] - 1035.0) / 1035.0;

  int match_bad = 0, match_cases = 0;
  for (int rep = 0; rep < 400; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(rep % 49);
    const auto s = innoprod::testing::random_match_sample(rng, n, 1 + rep % 4);
    for (auto t : {Treatment::kInnovator, Treatment::kProductOnly, Treatment::kProcessOnly, Treatment::kBoth}) {
      MatchConfig cfg;
      cfg.treatment = t;
      cfg.exact = rep % 2 ? ExactMatch::kYear : ExactMatch::kYearIndustry;
      cfg.neighbors = 1 + rep % 3;
      const auto labels = treatment_labels(s, t);
      const auto oracle = innoprod::testing::matching_oracle(s, labels, cfg);
      if (oracle.matches == 0) continue;
      ++match_cases;
      const auto est = match_ate(s, cfg);
      match_bad += !(est.estimate == oracle.estimate && est.matches == oracle.matches);
    }
  }
  Outcome o;
  o.pass = spill_bad == 0 && e800 <= 1e-10 && e1035 <= 1e-10 && match_bad == 0;
  o.detail = fmt::format("spillover mismatches {}/100; PIM rel err {:.1e}, {:.1e}; matching mismatches {}/{}", spill_bad,
                         e800, e1035, match_bad, match_cases);
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome criterion6() {
  const fs::path root = fs::temp_directory_path() / "innoprod_acceptance_c6";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "dgp.txt") << "n_firms = 200\n";
  std::ofstream(root / "spec.txt") << "variance = bootstrap\nbootstrap = 5\nstarts = 1\n";
  auto cli = [](std::vector<std::string> args) {
    args.insert(args.begin(), {"innoprod", "-q"});
    return cli::run_cli(args);
  };
  auto all_stages = [&](const fs::path& dir) {
    const auto run = (dir / "run").string();
    const auto sim = (dir / "sim").string();
    int rc = 0;
    rc |= cli({"simulate", "--config", (root / "dgp.txt").string(), "--seed", "9", "--out", sim});
    rc |= cli({"--run", run, "ingest", "--panel", sim + "/simulate/panel.csv", "--schema", sim + "/simulate/schema.txt",
               "--distances", sim + "/simulate/distances.csv"});
    rc |= cli({"--run", run, "capital"});
    rc |= cli({"--run", run, "spillover"});
    rc |= cli({"--run", run, "estimate", "--spec", (root / "spec.txt").string(), "--seed", "9"});
    rc |= cli({"--run", run, "ate", "--placebo", "10", "--seed", "9"});
    rc |= cli({"--run", run, "report"});
    rc |= cli({"mc-study", "--config", (root / "dgp.txt").string(), "--replications", "3", "--seed", "9", "--effects",
               "--out", (dir / "mc").string()});
    return rc;
  };
  const int rc1 = all_stages(root / "first");
  const int rc2 = all_stages(root / "second");
  int compared = 0, differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(root / "first")) {
    if (e.path().extension() != ".csv") continue;
    ++compared;
    differ += slurp(e.path()) != slurp(root / "second" / fs::relative(e.path(), root / "first"));
  }
  fs::remove_all(root);
  Outcome o;
  o.pass = rc1 == 0 && rc2 == 0 && compared > 20 && differ == 0;
  o.detail = fmt::format("{} CSV artifacts compared across two runs, {} differ (exit codes {}, {})", compared, differ,
                         rc1, rc2);
  return o;
}

Outcome criterion7() {
  DgpConfig dgp;
  dgp.seed = 70'000;
  const auto sim = generate_panel(dgp);
  const Panel base = prepare_panel(sim);
  std::vector<FirmYear> recs(sim.panel.records().begin(), sim.panel.records().end());
  for (auto& r : recs) {
    r.capital_book *= 100;
    r.investment *= 100;
    r.depreciation *= 100;
  }
  const Panel raw = Panel::from_records(recs, sim.panel.wave_spacing(), sim.distances);
  const Panel scaled = attach_spillovers(build_capital(raw).panel, sim.distances);
  EstimationSpec spec;
  spec.variance = VarianceMethod::kNone;
  const auto a = estimate(base, spec);
  const auto b = estimate(scaled, spec);
  // d0_shift is the intercept gap between the two regimes.
  double diff = 0;
  int slopes = 0;
  for (Eigen::Index i = 0; i < a.coef.size(); ++i) {
    if (a.names[static_cast<std::size_t>(i)] == "d0_shift") continue;
    diff = std::max(diff, std::abs(a.coef(i) - b.coef(i)));
    ++slopes;
  }
  Outcome o;
  o.pass = a.converged && b.converged && diff <= 1e-3;
  o.detail = fmt::format("max slope change {:.2e} over {} elasticities; intercepts {:.4f}/{:.4f} -> {:.4f}/{:.4f}",
                         diff, slopes, a.intercept, a.intercept0, b.intercept, b.intercept0);
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::err);
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                       criterion5, criterion6, criterion7};
  int failed = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[c]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    failed += !o.pass;
    fmt::print("criterion {}: {} ({}; {:.1f}s)\n", id, o.pass ? "PASS" : "FAIL", o.detail, seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
