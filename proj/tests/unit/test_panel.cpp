#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "innoprod/config.hpp"
#include "innoprod/error.hpp"
#include "innoprod/panel.hpp"
#include "innoprod/stats.hpp"

using namespace innoprod;

namespace {

const char* kHeader =
    "firm_id,year,revenue,value_added,employees,capital_book,investment,depreciation,materials,rnd,"
    "prod_innov,proc_innov,county,industry,age,north,potential_innovator,deflator\n";

std::string row(const std::string& firm, int year, const std::string& extra = "0") {
  return firm + "," + std::to_string(year) + ",1000,400,10,500,50,40,600,20,1,0,A,25,5,1," + extra + ",1.0\n";
}

IngestResult ingest(const std::string& text) {
  std::istringstream in(text);
  return load_panel(in, Schema{});
}

}  // namespace

TEST_CASE("well-formed rows are ingested unchanged", "[panel]") {
  const auto r = ingest(std::string(kHeader) + row("1", 2004) + row("1", 2006) + row("2", 2004));
  CHECK(r.panel.size() == 3);
  CHECK(r.rows_read == 3);
  CHECK(r.dropped_potential_innovator == 0);
  CHECK(r.panel[0].innovator);
  CHECK_FALSE(r.panel[0].d_zero_rnd);
}

TEST_CASE("potentially innovative non-innovators are dropped", "[panel]") {
  const auto r = ingest(std::string(kHeader) + row("1", 2004) + row("2", 2004, "1") + row("3", 2004));
  CHECK(r.panel.size() == 2);
  CHECK(r.dropped_potential_innovator == 1);
  REQUIRE(r.drop_log.size() == 1);
  CHECK(r.drop_log[0].find("2/2004") != std::string::npos);
}

TEST_CASE("duplicate firm-year is an integrity error naming the key", "[panel]") {
  try {
    ingest(std::string(kHeader) + row("7", 2010) + row("7", 2010));
    FAIL("expected IntegrityError");
  } catch (const IntegrityError& e) {
    CHECK(std::string(e.what()).find("firm 7") != std::string::npos);
    CHECK(std::string(e.what()).find("2010") != std::string::npos);
  }
}

TEST_CASE("missing required column is a schema error", "[panel]") {
  CHECK_THROWS_AS(ingest("firm_id,year\n1,2004\n"), SchemaError);
}

TEST_CASE("non-positive employees is a validation error", "[panel]") {
  std::string bad = row("1", 2004);
  bad.replace(bad.find(",10,500"), 7, ",0,500");
  CHECK_THROWS_AS(ingest(std::string(kHeader) + bad), ValidationError);
}

TEST_CASE("value added is derived from revenue minus materials", "[panel]") {
  const std::string header =
      "firm_id,year,revenue,employees,capital_book,investment,depreciation,materials,rnd,"
      "prod_innov,proc_innov,county,industry,age,north,deflator\n";
  const auto r = ingest(header + "1,2004,1000,10,500,50,40,600,0,0,0,A,25,5,0,1\n" +
                        "2,2004,,10,500,50,40,600,0,0,0,A,25,5,0,1\n");
  REQUIRE(r.panel.size() == 1);
  CHECK(r.panel[0].value_added == 400.0);
  CHECK(r.panel[0].d_zero_rnd);
  CHECK(r.dropped_missing_value_added == 1);
}

TEST_CASE("panel export round-trips", "[panel]") {
  const auto r = ingest(std::string(kHeader) + row("1", 2004) + row("1", 2006) + row("10", 2004) + row("2", 2008));
  const auto back = panel_from_table(panel_to_table(r.panel), 2);
  REQUIRE(back.size() == r.panel.size());
  for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == r.panel[i]);
}

TEST_CASE("canonical order sorts numeric ids numerically", "[panel]") {
  const auto r = ingest(std::string(kHeader) + row("10", 2004) + row("9", 2004) + row("9", 2002));
  CHECK(r.panel[0].firm_id == "9");
  CHECK(r.panel[0].year == 2002);
  CHECK(r.panel[2].firm_id == "10");
  CHECK(r.panel.lag(1) == std::optional<std::size_t>(0));
  CHECK_FALSE(r.panel.lag(2).has_value());
}

TEST_CASE("entrant classification boundary", "[panel]") {
  std::string text = kHeader;
  for (int age : {0, 5, 8, 9}) {
    std::string r = row("f" + std::to_string(age), 2004);
    r.replace(r.find(",A,25,5,"), 8, ",A,25," + std::to_string(age) + ",");
    text += r;
  }
  const auto p = ingest(text).panel;
  const auto c = classify_entrant(p, 8);
  std::map<int, bool> by_age;
  for (std::size_t i = 0; i < p.size(); ++i) by_age[p[i].age] = c.entrant[i] == 1;
  CHECK(by_age[0]);
  CHECK(by_age[5]);
  CHECK(by_age[8]);
  CHECK_FALSE(by_age[9]);
  CHECK(c.entrants == 3);
  CHECK(c.incumbents == 1);
}

TEST_CASE("Welch test against the textbook formula", "[stats]") {
  const std::vector<double> a{2.1, 2.9, 3.0, 3.8}, b{1.0, 1.1, 0.9, 1.2};
  const auto t = welch_t_test(a, b);
  // Independent evaluation.
  auto mv = [](const std::vector<double>& x) {
    double m = 0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0;
    for (double v : x) s += (v - m) * (v - m);
    return std::pair{m, s / static_cast<double>(x.size() - 1)};
  };
  const auto [ma, va] = mv(a);
  const auto [mb, vb] = mv(b);
  const double se2 = va / 4 + vb / 4;
  const double stat = (ma - mb) / std::sqrt(se2);
  const double df = se2 * se2 / ((va / 4) * (va / 4) / 3 + (vb / 4) * (vb / 4) / 3);
  CHECK(t.difference == Catch::Approx(ma - mb).epsilon(1e-12));
  CHECK(t.t == Catch::Approx(stat).epsilon(1e-12));
  CHECK(t.df == Catch::Approx(df).epsilon(1e-12));
  // Two-sided tail by Simpson integration of the t density.
  const double nu = df;
  auto dens = [nu](double x) {
    return std::exp(std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2)) / std::sqrt(nu * M_PI) *
           std::pow(1 + x * x / nu, -(nu + 1) / 2);
  };
  const int n = 20000;
  const double h = stat / n;
  double s = dens(0) + dens(stat);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4 : 2) * dens(i * h);
  const double p = 2 * (0.5 - s * h / 3);
  CHECK(t.p_value == Catch::Approx(p).margin(1e-9));
}

TEST_CASE("Welch test edge cases", "[stats]") {
  const std::vector<double> a{1, 2, 3};
  const auto same = welch_t_test(a, a);
  CHECK(same.difference == 0.0);
  CHECK(same.p_value == Catch::Approx(1.0));
  const std::vector<double> z{0, 1e-12, 0, -1e-12}, o{1, 1 + 1e-12, 1, 1 - 1e-12};
  CHECK(welch_t_test(z, o).p_value < 1e-6);
  const std::vector<double> c{1, 1, 1};
  CHECK_THROWS_AS(welch_t_test(c, c), UndefinedTestError);
  const std::vector<double> one{1};
  CHECK_THROWS_AS(welch_t_test(one, a), UndefinedTestError);
}

TEST_CASE("key-value config parsing", "[config]") {
  const auto cfg = KeyValueConfig::parse_string("# comment\na = 1\n\nb=x  # trailing\na = 2\n");
  CHECK(cfg.get_int("a", 0) == 2);
  CHECK(cfg.get_string("b") == "x");
  CHECK(cfg.canonical() == KeyValueConfig::parse_string("b = x\na = 2\n").canonical());
  CHECK_THROWS_AS(cfg.require_known({"a"}, "test"), SchemaError);
}
