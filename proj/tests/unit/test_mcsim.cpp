#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "innoprod/error.hpp"
#include "innoprod/mcsim.hpp"
#include "innoprod/oracle.hpp"

using namespace innoprod;

TEST_CASE("same seed gives identical panels", "[mcsim]") {
  DgpConfig cfg;
  cfg.n_firms = 80;
  const auto a = generate_panel(cfg);
  const auto b = generate_panel(cfg);
  REQUIRE(a.panel.size() == b.panel.size());
  for (std::size_t i = 0; i < a.panel.size(); ++i) CHECK(a.panel[i] == b.panel[i]);
  CHECK(a.truth.omega == b.truth.omega);
  cfg.seed = 2;
  const auto c = generate_panel(cfg);
  CHECK(c.truth.omega != a.truth.omega);
}

TEST_CASE("noiseless productivity follows the deterministic recursion", "[mcsim]") {
  DgpConfig cfg;
  cfg.n_firms = 50;
  cfg.sigma_xi = 0;
  cfg.sigma_eps = 0;
  cfg.delta_d = cfg.delta_c = cfg.delta_dc = 0;
  const auto sim = generate_panel(cfg);
  const auto& p = sim.panel;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (auto l = p.lag(i)) {
      CHECK(sim.truth.omega[i] == Catch::Approx(sim.truth.calibration.omega_const + cfg.rho * sim.truth.omega[*l]).margin(1e-14));
      CHECK(sim.truth.xi[i] == 0.0);
    }
    CHECK(sim.truth.eps[i] == 0.0);
  }
}

TEST_CASE("participation rates hit their targets", "[mcsim]") {
  DgpConfig cfg;
  const auto sim = generate_panel(cfg);
  double rnd = 0, innov = 0;
  for (const auto& r : sim.panel.records()) {
    rnd += r.d_zero_rnd ? 0 : 1;
    innov += r.innovator ? 1 : 0;
  }
  const double n = static_cast<double>(sim.panel.size());
  CHECK(std::abs(rnd / n - 0.30) <= 0.05);
  CHECK(std::abs(innov / n - 0.74) <= 0.05);
  CHECK(sim.panel.firms().size() == 1000);
}

TEST_CASE("Leontief outputs", "[mcsim]") {
  DgpConfig cfg;
  cfg.n_firms = 40;
  const auto sim = generate_panel(cfg);
  for (std::size_t i = 0; i < sim.panel.size(); ++i) {
    const auto& r = sim.panel[i];
    CHECK(r.revenue == Catch::Approx(r.materials + r.value_added).epsilon(1e-12));
    // log Q = y - eps + l - log(1 - 1/beta_m), materials = Q / beta_m.
    CHECK(std::log(r.materials) ==
          Catch::Approx(sim.truth.log_q[i] - std::log(cfg.beta_m)).epsilon(1e-10));
    CHECK(std::log(r.value_added) == Catch::Approx(std::log(1 - 1 / cfg.beta_m) + sim.truth.log_q[i] +
                                                   sim.truth.eps[i]).epsilon(1e-10));
  }
}

TEST_CASE("ground truth exposes the estimator parameters", "[mcsim]") {
  DgpConfig cfg;
  cfg.n_firms = 30;
  const auto sim = generate_panel(cfg);
  CHECK(sim.truth.value("k") == cfg.beta_k);
  CHECK(sim.truth.value("l_plus") == Catch::Approx(cfg.beta_l + cfg.beta_k + cfg.beta_r - 1));
  CHECK(sim.truth.value("gap") == Catch::Approx(cfg.delta_dc));
  CHECK_THROWS_AS(sim.truth.value("nope"), LookupError);
}

TEST_CASE("truth sidecar round trip", "[mcsim]") {
  DgpConfig cfg;
  cfg.n_firms = 25;
  const auto sim = generate_panel(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "innoprod_truth_test";
  std::filesystem::create_directories(dir);
  const auto stem = (dir / "truth").string();
  write_truth(sim.truth, stem);
  const auto back = read_truth(stem);
  CHECK(back.parameters == sim.truth.parameters);
  CHECK(back.omega == sim.truth.omega);
  CHECK(back.firm_id == sim.truth.firm_id);
  CHECK(back.config.to_config().canonical() == cfg.to_config().canonical());
  std::filesystem::remove_all(dir);
}

TEST_CASE("config validation", "[mcsim]") {
  DgpConfig cfg;
  cfg.rho = 1.2;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  CHECK_THROWS_AS(generate_panel(cfg), ValidationError);
  CHECK_THROWS_AS(DgpConfig::from_config(KeyValueConfig::parse_string("n_frims = 3\n")), SchemaError);
  DgpConfig ok;
  ok.n_firms = 77;
  CHECK(DgpConfig::from_config(ok.to_config()).n_firms == 77);
}

TEST_CASE("oracle report", "[mcsim]") {
  const std::map<std::string, double> truth{{"k", 0.3}, {"r", 0.05}};
  SECTION("exact estimates") {
    std::vector<ReplicationRecord> reps(3);
    for (auto& r : reps) {
      r.estimate = {{"k", 0.3}, {"r", 0.05}};
      r.se = {{"k", 0.01}, {"r", 0.01}};
    }
    const auto rep = oracle_report(truth, reps);
    CHECK(rep.row("k").bias == 0.0);
    CHECK(rep.row("k").rmse == 0.0);
    CHECK(*rep.row("k").coverage == 1.0);
  }
  SECTION("single replication") {
    std::vector<ReplicationRecord> reps(1);
    reps[0].estimate = {{"k", 0.32}};
    const auto rep = oracle_report(truth, reps);
    CHECK_FALSE(rep.row("k").sd.has_value());
    CHECK(rep.row("k").bias == Catch::Approx(0.02));
  }
  SECTION("unknown name") {
    std::vector<ReplicationRecord> reps(1);
    reps[0].estimate = {{"zz", 1.0}};
    CHECK_THROWS_AS(oracle_report(truth, reps), ComparisonError);
  }
}
