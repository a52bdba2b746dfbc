#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "innoprod/error.hpp"
#include "innoprod/oracle.hpp"
#include "innoprod/treatment.hpp"
#include "oracles.hpp"

using namespace innoprod;

namespace {

MatchSample toy(const std::vector<double>& x, const std::vector<double>& y, const std::vector<int>& treated) {
  MatchSample s;
  const auto n = x.size();
  s.covariates.resize(static_cast<Eigen::Index>(n), 1);
  s.outcome.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    s.rows.push_back(i);
    s.covariates(static_cast<Eigen::Index>(i), 0) = x[i];
    s.outcome(static_cast<Eigen::Index>(i)) = y[i];
    s.year.push_back(2010);
    s.industry.push_back("10");
    s.prod.push_back(static_cast<std::uint8_t>(treated[i]));
    s.proc.push_back(0);
  }
  return s;
}

AteEstimate effect(double est, double se, bool empty = false) {
  AteEstimate e;
  e.estimate = est;
  e.se = se;
  e.empty = empty;
  e.p_value = se > 0 ? 2 * (1 - 0.5 * std::erfc(-std::abs(est) / se / std::sqrt(2.0))) : 0.0;
  return e;
}

}  // namespace

TEST_CASE("six-row toy panel", "[ate]") {
  const auto s = toy({1, 0, 2, 4, 3.5, 10}, {5, 1, 2, 7, 4, 0}, {1, 0, 0, 1, 0, 0});
  MatchConfig cfg;
  cfg.exact = ExactMatch::kYear;
  const auto a = match_ate(s, cfg);
  CHECK(a.estimate == 4.0);
  CHECK(a.treated == 2);
  CHECK(a.controls == 4);
  CHECK(a.matches == 2);
}

TEST_CASE("identical units give a zero effect", "[ate]") {
  const auto s = toy({1, 1, 1, 1}, {3, 3, 3, 3}, {1, 0, 1, 0});
  const auto a = match_ate(s, MatchConfig{});
  CHECK(a.estimate == 0.0);
  CHECK(a.se == 0.0);
}

TEST_CASE("no shared cell is a no-overlap error", "[ate]") {
  auto s = toy({1, 2, 3}, {1, 2, 3}, {1, 0, 0});
  s.year = {2010, 2012, 2012};
  CHECK_THROWS_AS(match_ate(s, MatchConfig{}), NoOverlapError);
}

TEST_CASE("matching equals the exhaustive oracle on small panels", "[ate][oracle]") {
  std::mt19937_64 rng(2024);
  int checked = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 4 + static_cast<std::size_t>(rep % 47);
    const auto s = innoprod::testing::random_match_sample(rng, n, 1 + rep % 4);
    for (auto t : {Treatment::kInnovator, Treatment::kProductOnly, Treatment::kProcessOnly, Treatment::kBoth}) {
      MatchConfig cfg;
      cfg.treatment = t;
      cfg.exact = rep % 2 ? ExactMatch::kYear : ExactMatch::kYearIndustry;
      cfg.neighbors = 1 + rep % 3;
      const auto labels = treatment_labels(s, t);
      const auto o = innoprod::testing::matching_oracle(s, labels, cfg);
      if (o.matches == 0) {
        if (std::count(labels.begin(), labels.end(), 1) > 0) CHECK_THROWS_AS(match_ate(s, cfg), NoOverlapError);
        continue;
      }
      const auto a = match_ate(s, cfg);
      REQUIRE(a.estimate == o.estimate);
      REQUIRE(a.matches == o.matches);
      CHECK(a.se == Catch::Approx(o.se).epsilon(1e-12).margin(1e-15));
      ++checked;
    }
  }
  CHECK(checked > 500);
}

TEST_CASE("empty treated set is marked", "[ate]") {
  auto s = toy({1, 2, 3, 4}, {1, 2, 3, 4}, {1, 0, 1, 0});
  MatchConfig cfg;
  cfg.treatment = Treatment::kBoth;
  const auto a = match_ate(s, cfg);
  CHECK(a.empty);
  const auto fe = four_effects(s, MatchConfig{});
  CHECK(fe.d11.empty);
  CHECK_FALSE(fe.d10.empty);
}

TEST_CASE("complementarity test", "[ate]") {
  SECTION("additive effects") {
    const auto t = complementarity_test(effect(0.1, 0.02), effect(0.05, 0.02), effect(0.15, 0.02));
    CHECK(t.gap == Catch::Approx(0.0).margin(1e-15));
    CHECK_FALSE(t.complementary);
  }
  SECTION("zero convention on an insignificant single effect") {
    const auto t = complementarity_test(effect(0.05, 0.2), effect(0.227, 0.05), effect(0.305, 0.05), true);
    CHECK(t.gap == Catch::Approx(0.078).epsilon(1e-12));
    CHECK(t.zeroed == std::vector<std::string>{"d10"});
    CHECK(t.se == Catch::Approx(std::sqrt(0.05 * 0.05 * 2)).epsilon(1e-12));
  }
  SECTION("empty effect") {
    CHECK_THROWS_AS(complementarity_test(effect(0, 0, true), effect(0.2, 0.05), effect(0.3, 0.05)),
                    IncompleteInputsError);
    const auto t = complementarity_test(effect(0, 0, true), effect(0.2, 0.05), effect(0.3, 0.05), true);
    CHECK(t.gap == Catch::Approx(0.1));
  }
  SECTION("clear complementarity") {
    const auto t = complementarity_test(effect(0.1, 0.01), effect(0.05, 0.01), effect(0.3, 0.01));
    CHECK(t.complementary);
    CHECK(t.p_value < 1e-6);
  }
}

TEST_CASE("residual TFP identity and lag flags", "[ate]") {
  DgpConfig cfg;
  cfg.n_firms = 60;
  const auto panel = prepare_panel(generate_panel(cfg));
  EstimationResult zero;
  zero.names = {"l_plus", "k", "r"};
  zero.coef = VectorXd::Zero(3);
  const auto s = residual_tfp(panel, zero);
  for (std::size_t i = 0; i < panel.size(); ++i) {
    CHECK(s.residual[i] == std::log(panel[i].value_added / panel[i].employees));
    CHECK(static_cast<bool>(s.has_lag[i]) == panel.lag(i).has_value());
  }
}

TEST_CASE("placebo permutations are centred and reproducible", "[ate]") {
  std::mt19937_64 rng(9);
  const auto s = innoprod::testing::random_match_sample(rng, 400, 3);
  MatchConfig cfg;
  const auto a = placebo_ates(s, cfg, 60, 3);
  const auto b = placebo_ates(s, cfg, 60, 3);
  CHECK(a == b);
  double m = 0, v = 0;
  for (double x : a) m += x;
  m /= static_cast<double>(a.size());
  for (double x : a) v += (x - m) * (x - m);
  const double mcse = std::sqrt(v / static_cast<double>(a.size() - 1) / static_cast<double>(a.size()));
  CHECK(std::abs(m) <= 3 * mcse);
}

TEST_CASE("bias correction leaves exact matches alone", "[ate]") {
  const auto s = toy({1, 1, 2, 2}, {5, 1, 6, 2}, {1, 0, 1, 0});
  MatchConfig cfg;
  cfg.bias_correction = true;
  CHECK(match_ate(s, cfg).estimate == Catch::Approx(4.0).epsilon(1e-12));
}
