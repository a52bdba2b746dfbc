#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "innoprod/error.hpp"
#include "innoprod/spillover.hpp"
#include "oracles.hpp"

using namespace innoprod;
using innoprod::testing::record;

namespace {

CountyDistanceMatrix three_counties() {
  // A-B 50 km, A-C 200 km, B-C 180 km.
  return CountyDistanceMatrix({"A", "B", "C"}, {0, 50, 200, 50, 0, 180, 200, 180, 0});
}

}  // namespace

TEST_CASE("intra-industry weighted sum", "[spillover]") {
  const auto dist = three_counties();
  const auto panel = Panel::from_records({record("focal", 2010, 10, 0, "A", "25"),
                                          record("x", 2010, 10, 200, "A", "25"),
                                          record("y", 2010, 10, 400, "B", "25"),
                                          record("z", 2010, 10, 100, "C", "25"),
                                          record("w", 2012, 10, 999, "A", "25")});
  CHECK(intra_industry_knowledge(panel[0], panel, dist) == Catch::Approx(20.85).epsilon(1e-14));
  CHECK(inter_industry_knowledge(panel[0], panel, dist) == 0.0);
}

TEST_CASE("trivial spillover cases", "[spillover]") {
  const auto dist = three_counties();
  const auto alone = Panel::from_records({record("a", 2010, 10, 50, "A", "25")});
  CHECK(intra_industry_knowledge(alone[0], alone, dist) == 0.0);
  CHECK(inter_industry_knowledge(alone[0], alone, dist) == 0.0);
  const auto pair = Panel::from_records({record("a", 2010, 10, 0, "A", "25"), record("b", 2010, 10, 200, "A", "25")});
  CHECK(intra_industry_knowledge(pair[0], pair, dist) == 20.0);
  const auto other = Panel::from_records({record("a", 2010, 10, 0, "A", "25"), record("b", 2010, 10, 70, "A", "31")});
  CHECK(inter_industry_knowledge(other[0], other, dist) == 7.0);
  CHECK(intra_industry_knowledge(other[0], other, dist) == 0.0);
}

TEST_CASE("unknown county is a lookup error", "[spillover]") {
  const auto dist = three_counties();
  const auto panel = Panel::from_records({record("a", 2010, 10, 0, "Q", "25"), record("b", 2010, 10, 20, "A", "25")});
  CHECK_THROWS_AS(compute_spillovers(panel, dist), LookupError);
}

TEST_CASE("spillovers equal the double loop on random panels", "[spillover][oracle]") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const auto [panel, dist] = innoprod::testing::random_spillover_panel(rng, 2 + rep % 9);
    const auto m = compute_spillovers(panel, dist);
    const auto [intra, inter] = innoprod::testing::spillover_double_loop(panel, dist);
    REQUIRE(m.intra == intra);
    REQUIRE(m.inter == inter);
  }
}

TEST_CASE("spillover properties", "[spillover]") {
  std::mt19937_64 rng(5);
  const auto [panel, dist] = innoprod::testing::random_spillover_panel(rng, 12);
  const auto m = compute_spillovers(panel, dist);

  SECTION("non-negative, additive") {
    for (std::size_t i = 0; i < panel.size(); ++i) {
      CHECK(m.intra[i] >= 0);
      CHECK(m.inter[i] >= 0);
      double all = 0;
      for (std::size_t j = 0; j < panel.size(); ++j) {
        if (panel[j].year != panel[i].year || panel[j].firm_id == panel[i].firm_id) continue;
        const double w = panel[j].county == panel[i].county ? 1.0 : 1.0 / dist.distance(panel[i].county, panel[j].county);
        all += w * panel[j].rnd / panel[j].employees;
      }
      CHECK(m.intra[i] + m.inter[i] == Catch::Approx(all).epsilon(1e-12));
    }
  }

  SECTION("permutation invariance over input order") {
    std::vector<FirmYear> recs(panel.records().begin(), panel.records().end());
    std::reverse(recs.begin(), recs.end());
    const auto again = compute_spillovers(Panel::from_records(recs), dist);
    CHECK(again.intra == m.intra);
    CHECK(again.inter == m.inter);
  }

  SECTION("monotone in other firms' R&D") {
    std::vector<FirmYear> recs(panel.records().begin(), panel.records().end());
    recs[0].rnd += 1000;
    recs[0].d_zero_rnd = false;
    const auto up = compute_spillovers(Panel::from_records(recs), dist);
    for (std::size_t i = 1; i < panel.size(); ++i) {
      CHECK(up.intra[i] >= m.intra[i]);
      CHECK(up.inter[i] >= m.inter[i]);
    }
  }
}

TEST_CASE("attach_spillovers fills the panel columns", "[spillover]") {
  std::mt19937_64 rng(3);
  auto [panel, dist] = innoprod::testing::random_spillover_panel(rng, 6);
  auto shared = std::make_shared<const CountyDistanceMatrix>(dist);
  const auto out = attach_spillovers(panel, shared);
  CHECK(out.has_spillovers());
  CHECK_THROWS_AS(attach_spillovers(panel, nullptr), DependencyError);
}
