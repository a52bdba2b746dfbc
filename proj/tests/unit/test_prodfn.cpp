#include <catch_amalgamated.hpp>

#include <cmath>

#include "innoprod/error.hpp"
#include "innoprod/oracle.hpp"
#include "innoprod/prodfn.hpp"
#include "innoprod/stats.hpp"
#include "oracles.hpp"

using namespace innoprod;

namespace {

Simulation simulate(int firms, std::uint64_t seed, DgpConfig cfg = {}) {
  cfg.n_firms = firms;
  cfg.seed = seed;
  return generate_panel(cfg);
}

EstimationSpec quick_spec() {
  EstimationSpec s;
  s.variance = VarianceMethod::kNone;
  s.starts = 1;
  return s;
}

const Panel& shared_panel() {
  static const Panel p = prepare_panel(simulate(400, 21));
  return p;
}

EstimationResult fake_result(double a, double b, double va, double vb, double cab) {
  EstimationResult r;
  r.names = {"a", "b"};
  r.labels = {"a", "b"};
  r.coef = VectorXd(2);
  r.coef << a, b;
  r.variance = MatrixXd(2, 2);
  r.variance << va, cab, cab, vb;
  return r;
}

}  // namespace

TEST_CASE("spec config round trip and validation", "[prodfn]") {
  EstimationSpec s;
  s.estimator = EstimatorKind::kOp;
  s.group = SampleGroup::kEntrants;
  s.spillovers = false;
  s.bootstrap = 17;
  s.seed = 99;
  const auto back = EstimationSpec::from_config(s.to_config());
  CHECK(back.to_config().canonical() == s.to_config().canonical());
  EstimationSpec bad;
  bad.phi_degree = 0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(EstimationSpec::from_config(KeyValueConfig::parse_string("estimater = acf\n")), SchemaError);
}

TEST_CASE("first stage reproduces a noiseless outcome", "[prodfn]") {
  DgpConfig cfg;
  cfg.sigma_eps = 0;
  const auto panel = prepare_panel(simulate(200, 4, cfg));
  const auto fs = first_stage(panel, quick_spec());
  CHECK(fs.residual.cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("first stage fit and residual mean", "[prodfn]") {
  const auto sim = simulate(1000, 8);
  const auto panel = prepare_panel(sim);
  const auto fs = first_stage(panel, quick_spec());
  CHECK(std::abs(fs.residual.mean()) <= 1e-10);
  // Share of the outcome variance not due to measurement error.
  std::vector<double> y, eps;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    y.push_back(std::log(panel[i].value_added / panel[i].employees));
    eps.push_back(sim.truth.eps[i]);
  }
  const double implied = 1 - sample_variance(eps) / sample_variance(y);
  CHECK(fs.r2 >= implied - 0.01);
  CHECK(fs.r2 <= implied + 0.01);
}

TEST_CASE("constant proxy is a collinearity error", "[prodfn]") {
  std::vector<FirmYear> recs(shared_panel().records().begin(), shared_panel().records().end());
  for (auto& r : recs) r.materials = 1000;
  CHECK_THROWS_AS(first_stage(Panel::from_records(recs, 2), quick_spec()), CollinearityError);
}

TEST_CASE("missing upstream columns are dependency errors", "[prodfn]") {
  const auto sim = simulate(100, 2);
  CHECK_THROWS_AS(estimate(sim.panel, quick_spec()), DependencyError);
  auto spec = quick_spec();
  const auto capital_only = prepare_panel(sim).with_distances(nullptr);
  std::vector<FirmYear> recs(capital_only.records().begin(), capital_only.records().end());
  for (auto& r : recs) r.intra_rnd = r.inter_rnd = std::nan("");
  CHECK_THROWS_AS(estimate(Panel::from_records(recs, 2), spec), DependencyError);
  spec.spillovers = false;
  CHECK_NOTHROW(estimate(Panel::from_records(recs, 2), spec));
}

TEST_CASE("estimation is deterministic and solves the moments", "[prodfn]") {
  const auto a = estimate(shared_panel(), quick_spec());
  const auto b = estimate(shared_panel(), quick_spec());
  CHECK(a.converged);
  CHECK(a.coef == b.coef);
  CHECK(a.omega == b.omega);
  CHECK(a.moments.cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(a.names.front() == "l_plus");
  // Mean omega normalised to zero.
  double m = 0;
  for (double w : a.omega) m += w;
  CHECK(std::abs(m / static_cast<double>(a.omega.size())) <= 1e-10);
}

TEST_CASE("analytic variance is symmetric positive definite", "[prodfn]") {
  auto spec = quick_spec();
  spec.variance = VarianceMethod::kAnalytic;
  const auto r = estimate(shared_panel(), spec);
  REQUIRE(r.variance.rows() == r.coef.size());
  CHECK((r.variance - r.variance.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(r.variance);
  CHECK(es.eigenvalues().minCoeff() > 0);
}

TEST_CASE("bootstrap", "[prodfn]") {
  auto spec = quick_spec();
  const auto base = estimate(shared_panel(), spec);
  SECTION("one replicate is degenerate") {
    spec.bootstrap = 1;
    const auto b = bootstrap(shared_panel(), spec, base);
    CHECK(b.degenerate);
    CHECK(b.variance.cwiseAbs().maxCoeff() == 0.0);
    CHECK(b.se.cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("same seed, same standard errors") {
    spec.bootstrap = 4;
    spec.seed = 7;
    const auto a = bootstrap(shared_panel(), spec, base);
    const auto b = bootstrap(shared_panel(), spec, base);
    CHECK(a.se == b.se);
    CHECK(a.replicates + a.failed == 4);
    CHECK(a.se.minCoeff() > 0);
  }
}

TEST_CASE("Wald equality test", "[prodfn]") {
  const auto zero = wald_equality(fake_result(0.3, 0.3, 0.01, 0.02, 0.0), "a", "b");
  CHECK(zero.statistic == 0.0);
  CHECK(zero.p_value == Catch::Approx(1.0));
  const auto one = wald_equality(fake_result(1.0, 0.0, 0.6, 0.4, 0.0), "a", "b");
  CHECK(one.statistic == Catch::Approx(1.0).epsilon(1e-14));
  CHECK(one.p_value == Catch::Approx(innoprod::testing::chi2_1_upper(1.0)).epsilon(1e-10));
  CHECK(one.p_value == Catch::Approx(0.3173).margin(5e-5));
  const double var = 0.011 * 0.011 / 6.92;
  const auto reported = wald_equality(fake_result(0.304, 0.293, var, 0.0, 0.0), "a", "b");
  CHECK(reported.statistic == Catch::Approx(6.92).epsilon(1e-12));
  CHECK(reported.p_value == Catch::Approx(0.008).margin(1e-3));
  CHECK_THROWS_AS(wald_equality(fake_result(1.0, 0.0, 0.5, 0.5, 0.5), "a", "b"), UndefinedTestError);
  CHECK_THROWS_AS(wald_equality(fake_result(1.0, 0.0, 0.5, 0.5, 0.0), "a", "zz"), LookupError);
}

TEST_CASE("chi-square tail against the closed form", "[stats]") {
  for (double c : {0.01, 0.5, 1.0, 2.7, 6.92, 15.0}) {
    CHECK(chi2_upper_tail(c, 1) == Catch::Approx(innoprod::testing::chi2_1_upper(c)).epsilon(1e-10));
  }
}

TEST_CASE("capital scale moves only the intercepts", "[prodfn]") {
  std::vector<FirmYear> recs(shared_panel().records().begin(), shared_panel().records().end());
  for (auto& r : recs) r.capital *= 100;
  const Panel scaled = Panel::from_records(recs, 2, shared_panel().distances());
  const auto a = estimate(shared_panel(), quick_spec());
  const auto b = estimate(scaled, quick_spec());
  for (Eigen::Index i = 0; i < a.coef.size(); ++i) {
    if (a.names[static_cast<std::size_t>(i)] == "d0_shift") continue;
    CHECK(std::abs(a.coef(i) - b.coef(i)) <= 1e-3);
  }
  // The regime intercept gap absorbs (k - k0) log 100.
  CHECK(b.value("d0_shift") - a.value("d0_shift") ==
        Catch::Approx((a.value("k") - a.value("k0")) * std::log(100.0)).margin(1e-6));
}

TEST_CASE("group split", "[prodfn]") {
  auto spec = quick_spec();
  spec.variance = VarianceMethod::kAnalytic;
  SECTION("single group gives one result and a notice") {
    std::vector<FirmYear> recs(shared_panel().records().begin(), shared_panel().records().end());
    for (auto& r : recs) r.age += 20;
    const auto s = group_split_estimation(Panel::from_records(recs, 2, shared_panel().distances()), spec,
                                          SplitKind::kEntrantIncumbent);
    CHECK(s.results.size() == 1);
    CHECK_FALSE(s.test.has_value());
    CHECK_FALSE(s.notice.empty());
  }
  SECTION("entrants and incumbents") {
    const auto s = group_split_estimation(shared_panel(), spec, SplitKind::kEntrantIncumbent);
    REQUIRE(s.results.size() == 2);
    CHECK(s.group_labels == std::vector<std::string>{"incumbents", "entrants"});
    REQUIRE(s.test.has_value());
    CHECK(s.test->p_value >= 0.0);
    CHECK(s.test->p_value <= 1.0);
  }
}

TEST_CASE("OP variant", "[prodfn]") {
  DgpConfig cfg;
  cfg.mode = DgpMode::kCobbDouglas;
  const auto panel = prepare_panel(simulate(400, 5, cfg));
  auto spec = quick_spec();
  spec.estimator = EstimatorKind::kOp;
  const auto a = estimate(panel, spec);
  const auto b = estimate(panel, spec);
  CHECK(a.coef == b.coef);
  CHECK(a.extra_names.size() == 2);
  CHECK(std::abs(a.value("k") - 0.30) < 0.1);
  std::vector<FirmYear> recs(panel.records().begin(), panel.records().end());
  for (auto& r : recs) r.investment = 0;
  CHECK_THROWS_AS(estimate(Panel::from_records(recs, 2, panel.distances()), spec), InsufficientDataError);
}
