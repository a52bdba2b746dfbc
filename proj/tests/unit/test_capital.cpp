#include <catch_amalgamated.hpp>

#include <vector>

#include "innoprod/capital.hpp"
#include "oracles.hpp"

using namespace innoprod;
using innoprod::testing::record;

namespace {

FirmYear wave(int year, double book, double invest, double depr, double deflator) {
  FirmYear r = record("1", year);
  r.capital_book = book;
  r.investment = invest;
  r.depreciation = depr;
  r.deflator = deflator;
  return r;
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("useful life", "[capital]") {
  CHECK(*useful_life(900, 100, 100) == 10.0);
  CHECK(*useful_life(0, 0, 5) == 0.0);
  CHECK_FALSE(useful_life(100, 10, 0).has_value());
}

TEST_CASE("PIM hand fixtures", "[capital]") {
  SECTION("flat prices, no investment, life 10") {
    // Life of the second period: (GK_0 + I_1) / DEPR_1 = 10.
    const std::vector<FirmYear> recs{wave(2004, 1000, 0, 0, 1.0), wave(2005, 900, 0, 100, 1.0)};
    const auto s = pim_series(recs, 1);
    REQUIRE(s.status == CapitalStatus::kOk);
    CHECK(s.mean_life == 10.0);
    CHECK(s.capital[0] == 1000.0);
    CHECK(rel(s.capital[1], 800.0) <= 1e-10);
  }
  SECTION("price ratio 1.05, investment 100, life 20") {
    const std::vector<FirmYear> recs{wave(2004, 1000, 0, 0, 2.0), wave(2005, 1000, 100, 55, 2.1)};
    const auto s = pim_series(recs, 1);
    REQUIRE(s.mean_life == 20.0);
    CHECK(rel(s.capital[1], 1035.0) <= 1e-10);
  }
}

TEST_CASE("single period keeps the book value", "[capital]") {
  const std::vector<FirmYear> recs{wave(2004, 500, 10, 5, 1.0)};
  const auto s = pim_series(recs, 2);
  CHECK(s.capital[0] == 500.0);
  CHECK(s.status == CapitalStatus::kOk);
}

TEST_CASE("flat prices and no investment give a geometric decline", "[capital]") {
  std::vector<FirmYear> recs{wave(2004, 1000, 0, 0, 1.0)};
  for (int t = 1; t < 6; ++t) recs.push_back(wave(2004 + 2 * t, 1000, 0, 125, 1.0));  // life 8
  const auto s = pim_series(recs, 2);
  REQUIRE(s.mean_life == 8.0);
  for (std::size_t t = 1; t < recs.size(); ++t) {
    CHECK(s.capital[t] < s.capital[t - 1]);
    CHECK(rel(s.capital[t] / s.capital[t - 1], 0.75) <= 1e-12);
  }
}

TEST_CASE("gap larger than the wave spacing re-initialises", "[capital]") {
  std::vector<FirmYear> a{wave(2004, 1000, 0, 0, 1.0), wave(2006, 1000, 0, 100, 1.0), wave(2010, 700, 30, 100, 1.0),
                          wave(2012, 700, 30, 73, 1.1)};
  const auto s = pim_series(a, 2);
  CHECK_FALSE(s.initialized[1]);
  CHECK(s.initialized[2]);
  CHECK(s.capital[2] == 700.0);
  // Post-gap values only depend on the post-gap records and the firm life.
  auto b = a;
  b[0].capital_book = 5000;
  b[1].capital_book = 2000;
  b[1].depreciation = 200;
  const auto t = pim_series(b, 2);
  CHECK(t.capital[2] == 700.0);
  const double factor_a = 1 - 2 / s.mean_life;
  const double factor_b = 1 - 2 / t.mean_life;
  CHECK(rel(s.capital[3] / factor_a, t.capital[3] / factor_b) <= 1e-12);
}

TEST_CASE("currency homogeneity", "[capital]") {
  std::vector<FirmYear> recs{wave(2004, 800, 0, 0, 1.0), wave(2006, 820, 90, 60, 1.04), wave(2008, 850, 70, 65, 1.1)};
  auto scaled = recs;
  for (auto& r : scaled) {
    r.capital_book *= 37;
    r.investment *= 37;
    r.depreciation *= 37;
  }
  const auto a = pim_series(recs, 2);
  const auto b = pim_series(scaled, 2);
  CHECK(rel(a.mean_life, b.mean_life) <= 1e-14);
  for (std::size_t t = 0; t < recs.size(); ++t) CHECK(rel(b.capital[t], 37 * a.capital[t]) <= 1e-12);
}

TEST_CASE("short life flags the firm and excludes it", "[capital]") {
  std::vector<FirmYear> recs{wave(2004, 100, 0, 0, 1.0), wave(2005, 100, 0, 80, 1.0)};  // life 1.25
  const auto s = pim_series(recs, 1);
  CHECK(s.status == CapitalStatus::kNonPositiveFactor);
  auto good = recs;
  for (auto& r : good) r.firm_id = "2";
  good[1].depreciation = 10;
  std::vector<FirmYear> all = recs;
  all.insert(all.end(), good.begin(), good.end());
  const auto res = build_capital(Panel::from_records(all));
  REQUIRE(res.excluded_firms == std::vector<std::string>{"1"});
  CHECK(res.panel.size() == 2);
  CapitalOptions keep;
  keep.exclude_flagged = false;
  CHECK(build_capital(Panel::from_records(all), keep).panel.size() == 4);
}

TEST_CASE("per-period life switch", "[capital]") {
  std::vector<FirmYear> recs{wave(2004, 1000, 0, 0, 1.0), wave(2005, 900, 0, 100, 1.0), wave(2006, 900, 0, 50, 1.0)};
  CapitalOptions o;
  o.per_period_life = true;
  const auto s = pim_series(recs, 1, o);
  CHECK(rel(s.capital[1], 800.0) <= 1e-12);
  CHECK(rel(s.capital[2], 800.0 * (1 - 2.0 / 18.0)) <= 1e-12);
}
