#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "innoprod/report.hpp"

namespace fs = std::filesystem;
using innoprod::cli::run_cli;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "innoprod");
  return run_cli(args);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("estimate without upstream stages fails with a dependency error", "[cli]") {
  TempDir t("innoprod_cli_dep");
  CHECK(cli({"-q", "--run", (t.path / "run").string(), "estimate"}) == 1);
  CHECK(cli({"-q", "--run", (t.path / "run").string(), "ate"}) == 1);
  CHECK(cli({"-q", "--run", (t.path / "run").string(), "capital"}) == 1);
}

TEST_CASE("usage errors exit with 2", "[cli]") {
  CHECK(cli({"estimate", "--estimator", "xyz"}) == 2);
  CHECK(cli({"nosuch"}) == 2);
  CHECK(cli({}) == 2);
}

TEST_CASE("pipeline reruns produce identical artifacts", "[cli]") {
  TempDir t("innoprod_cli_pipeline");
  write(t.path / "dgp.txt", "n_firms = 150\n");
  const std::string cfg = "simulate = dgp.txt\nseed = 5\nvariance = analytic\nplacebo = 5\n";
  write(t.path / "a.txt", cfg + "out = a\n");
  write(t.path / "b.txt", cfg + "out = b\n");
  REQUIRE(cli({"-q", "run", (t.path / "a.txt").string()}) == 0);
  REQUIRE(cli({"-q", "run", (t.path / "b.txt").string()}) == 0);
  int compared = 0;
  for (const auto& e : fs::recursive_directory_iterator(t.path / "a")) {
    if (e.path().extension() != ".csv") continue;
    const auto rel = fs::relative(e.path(), t.path / "a");
    CHECK(slurp(e.path()) == slurp(t.path / "b" / rel));
    ++compared;
  }
  CHECK(compared > 15);
  CHECK(fs::exists(t.path / "a" / "report" / "report.txt"));
  const auto table = slurp(t.path / "a" / "estimate" / "table.txt");
  CHECK(table.find("log(Capital/Employees)") != std::string::npos);
  CHECK(table.find("Pr(chi2(1) > C)") != std::string::npos);
  const auto manifest = slurp(t.path / "a" / "manifest.json");
  CHECK(manifest.find("\"config_hash\"") != std::string::npos);
  CHECK(manifest.find("\"seconds\"") != std::string::npos);
}

TEST_CASE("stages run one at a time", "[cli]") {
  TempDir t("innoprod_cli_stages");
  write(t.path / "dgp.txt", "n_firms = 400\n");
  const auto sim = (t.path / "sim").string();
  const auto run = (t.path / "run").string();
  REQUIRE(cli({"-q", "simulate", "--config", (t.path / "dgp.txt").string(), "--seed", "3", "--out", sim}) == 0);
  REQUIRE(cli({"-q", "--run", run, "ingest", "--panel", sim + "/simulate/panel.csv", "--schema",
               sim + "/simulate/schema.txt", "--distances", sim + "/simulate/distances.csv"}) == 0);
  REQUIRE(cli({"-q", "--run", run, "capital"}) == 0);
  REQUIRE(cli({"-q", "--run", run, "estimate", "--spillovers", "off", "--bootstrap", "3", "--seed", "4"}) == 0);
  REQUIRE(cli({"-q", "--run", run, "ate", "--effect", "d10", "--exact", "year"}) == 0);
  REQUIRE(cli({"-q", "--run", run, "report"}) == 0);
  const auto ate = slurp(t.path / "run" / "ate" / "ate.csv");
  CHECK(ate.find("d10") != std::string::npos);
  CHECK(ate.find("delta") == std::string::npos);
  CHECK(cli({"-q", "--run", run, "estimate", "--spillovers", "on"}) == 1);
  REQUIRE(cli({"-q", "--run", run, "spillover"}) == 0);
  REQUIRE(cli({"-q", "--run", run, "estimate", "--split", "entrants", "--variance", "analytic"}) == 0);
  const auto groups = slurp(t.path / "run" / "estimate" / "groups.txt");
  CHECK(groups == "incumbents\nentrants\n");
  REQUIRE(cli({"-q", "--run", run, "ate", "--zero-convention", "on"}) == 0);
}

TEST_CASE("report formatting", "[report]") {
  innoprod::ReportCell c;
  c.value = 0.3041;
  c.se = 0.012;
  c.p_value = 0.004;
  c.precision = 3;
  CHECK(innoprod::format_value(c) == "0.304***");
  CHECK(innoprod::format_se(c) == "(0.012)");
  c.p_value = 0.07;
  CHECK(innoprod::format_value(c) == "0.304*");
}
