#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <sstream>

#include "innoprod/config.hpp"
#include "innoprod/error.hpp"

namespace innoprod::cli {

namespace {

const std::vector<std::string> kStages{"simulate", "ingest", "capital", "spillover", "estimate", "ate", "report"};

void setup_logging(bool verbose, bool quiet) {
  auto logger = spdlog::get("innoprod");
  if (!logger) {
    logger = spdlog::stderr_color_mt("innoprod");
    logger->set_pattern("[%l] %v");
  }
  spdlog::set_default_logger(logger);
  spdlog::set_level(quiet ? spdlog::level::err : verbose ? spdlog::level::debug : spdlog::level::info);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

bool on_off(const std::string& key, const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ValidationError("'" + key + "' must be on or off, got '" + v + "'");
}

}  // namespace

void run_pipeline(const std::string& config_path, const std::vector<std::string>& stage_override) {
  const auto cfg = KeyValueConfig::load(config_path);
  cfg.require_known({"out",  "seed",       "stages",          "verbosity",      "simulate",  "panel",
                     "schema", "deflators", "distances", "distance_unit",      "max_entrant_age", "per_period_life",
                     "keep_flagged", "spec", "estimator",     "group",          "spillovers", "bootstrap",
                     "variance", "split",   "effect",         "neighbors",      "exact",     "zero_convention",
                     "bias_correction",     "placebo"},
                    "run config");
  const fs::path base = fs::path(config_path).parent_path();
  auto path_of = [&](const std::string& key) -> std::string {
    if (!cfg.has(key)) return {};
    const fs::path p(cfg.get_string(key));
    return (p.is_absolute() ? p : base / p).string();
  };
  if (!cfg.has("out")) throw ValidationError("run config needs 'out'");
  const RunDir run(path_of("out"));
  const auto seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));

  std::vector<std::string> stages = stage_override;
  if (stages.empty() && cfg.has("stages")) stages = split_list(cfg.get_string("stages"));
  if (stages.empty()) {
    for (const auto& s : kStages) {
      if (s != "simulate" || cfg.has("simulate")) stages.push_back(s);
    }
  }
  for (const auto& s : stages) {
    if (std::find(kStages.begin(), kStages.end(), s) == kStages.end()) {
      throw ValidationError("unknown stage '" + s + "'");
    }
  }
  fs::create_directories(run.root());
  record_run(run, hex64(fnv1a64(cfg.canonical())), seed);

  const bool simulated = cfg.has("simulate");
  auto sim_file = [&](const std::string& key, const std::string& file) {
    if (cfg.has(key)) return path_of(key);
    if (simulated) return (run.stage("simulate") / file).string();
    return std::string{};
  };

  for (const auto& stage : stages) {
    spdlog::info("running stage {}", stage);
    if (stage == "simulate") {
      if (!simulated) throw ValidationError("stage simulate needs 'simulate' in the run config");
      SimulateOptions o;
      o.config = path_of("simulate");
      o.seed = seed;
      o.out = run.root().string();
      stage_simulate(o);
    } else if (stage == "ingest") {
      IngestOptions o;
      o.panel = sim_file("panel", "panel.csv");
      o.schema = sim_file("schema", "schema.txt");
      o.deflators = path_of("deflators");
      o.distances = sim_file("distances", "distances.csv");
      o.distance_unit = cfg.get_string("distance_unit", "km");
      o.max_entrant_age = static_cast<int>(cfg.get_int("max_entrant_age", 8));
      stage_ingest(run, o);
    } else if (stage == "capital") {
      CapitalStageOptions o;
      o.per_period_life = cfg.get_bool("per_period_life", false);
      o.keep_flagged = cfg.get_bool("keep_flagged", false);
      stage_capital(run, o);
    } else if (stage == "spillover") {
      SpilloverOptions o;
      o.distances = path_of("distances");
      o.distance_unit = cfg.get_string("distance_unit", "km");
      stage_spillover(run, o);
    } else if (stage == "estimate") {
      EstimateOptions o;
      o.spec = path_of("spec");
      if (cfg.has("estimator")) o.estimator = cfg.get_string("estimator");
      if (cfg.has("group")) o.group = cfg.get_string("group");
      if (cfg.has("spillovers")) o.spillovers = on_off("spillovers", cfg.get_string("spillovers"));
      if (cfg.has("bootstrap")) o.bootstrap = static_cast<int>(cfg.get_int("bootstrap", 200));
      if (cfg.has("variance")) o.variance = cfg.get_string("variance");
      o.seed = seed;
      o.split = cfg.get_string("split", "none");
      stage_estimate(run, o);
    } else if (stage == "ate") {
      AteOptions o;
      o.effect = cfg.get_string("effect", "all");
      o.neighbors = static_cast<int>(cfg.get_int("neighbors", 1));
      if (cfg.has("exact")) o.exact = cfg.get_string("exact");
      o.zero_convention = on_off("zero_convention", cfg.get_string("zero_convention", "off"));
      o.bias_correction = on_off("bias_correction", cfg.get_string("bias_correction", "off"));
      o.placebo = static_cast<int>(cfg.get_int("placebo", 0));
      o.seed = seed;
      stage_ate(run, o);
    } else if (stage == "report") {
      stage_report(run);
    }
  }
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"innoprod: productivity effects of R&D and innovation on firm panels"};
  app.require_subcommand(1);
  std::string run_dir = "run";
  bool verbose = false;
  bool quiet = false;
  app.add_option("--run", run_dir, "Run directory holding stage outputs and manifest.json");
  app.add_flag("-v,--verbose", verbose, "Debug logging");
  app.add_flag("-q,--quiet", quiet, "Errors only");

  IngestOptions ingest;
  auto* c_ingest = app.add_subcommand("ingest", "Validate a raw panel and store it in the run");
  c_ingest->add_option("--panel", ingest.panel, "Panel CSV")->required()->check(CLI::ExistingFile);
  c_ingest->add_option("--schema", ingest.schema, "Column mapping (key-value)")->check(CLI::ExistingFile);
  c_ingest->add_option("--deflators", ingest.deflators, "Deflator CSV")->check(CLI::ExistingFile);
  c_ingest->add_option("--distances", ingest.distances, "County distance CSV")->check(CLI::ExistingFile);
  c_ingest->add_option("--distance-unit", ingest.distance_unit, "Unit of the distance file");
  c_ingest->add_option("--max-entrant-age", ingest.max_entrant_age, "Entrant age threshold");

  CapitalStageOptions capital;
  auto* c_capital = app.add_subcommand("capital", "Build the capital series");
  c_capital->add_flag("--per-period-life", capital.per_period_life, "Use each period's own useful life");
  c_capital->add_flag("--keep-flagged", capital.keep_flagged, "Keep firms with undefined capital");

  SpilloverOptions spill;
  auto* c_spill = app.add_subcommand("spillover", "Attach knowledge spillover measures");
  c_spill->add_option("--distances", spill.distances, "County distance CSV")->check(CLI::ExistingFile);
  c_spill->add_option("--distance-unit", spill.distance_unit, "Unit of the distance file");

  EstimateOptions est;
  std::string est_spill;
  auto* c_est = app.add_subcommand("estimate", "Estimate the production function");
  c_est->add_option("--spec", est.spec, "Estimation spec (key-value)")->check(CLI::ExistingFile);
  c_est->add_option("--estimator", est.estimator, "acf or op")->check(CLI::IsMember({"acf", "op"}));
  c_est->add_option("--group", est.group, "all, entrants or incumbents")
      ->check(CLI::IsMember({"all", "entrants", "incumbents"}));
  c_est->add_option("--spillovers", est_spill, "on or off")->check(CLI::IsMember({"on", "off"}));
  c_est->add_option("--bootstrap", est.bootstrap, "Bootstrap replicates");
  c_est->add_option("--seed", est.seed, "Bootstrap seed");
  c_est->add_option("--variance", est.variance, "none, analytic or bootstrap")
      ->check(CLI::IsMember({"none", "analytic", "bootstrap"}));
  c_est->add_option("--split", est.split, "none, entrants or hightech")
      ->check(CLI::IsMember({"none", "entrants", "hightech"}));

  AteOptions ate;
  std::string ate_zero = "off";
  std::string ate_bc = "off";
  auto* c_ate = app.add_subcommand("ate", "Matching estimates of the innovation effects");
  c_ate->add_option("--effect", ate.effect, "all, delta, d10, d01 or d11")
      ->check(CLI::IsMember({"all", "delta", "d10", "d01", "d11"}));
  c_ate->add_option("--neighbors", ate.neighbors, "Matches per unit");
  c_ate->add_option("--exact", ate.exact, "year or year+industry")->check(CLI::IsMember({"year", "year+industry"}));
  c_ate->add_option("--zero-convention", ate_zero, "on or off")->check(CLI::IsMember({"on", "off"}));
  c_ate->add_option("--bias-correction", ate_bc, "on or off")->check(CLI::IsMember({"on", "off"}));
  c_ate->add_option("--placebo", ate.placebo, "Label permutations for the placebo check");
  c_ate->add_option("--seed", ate.seed, "Placebo seed");

  SimulateOptions sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic panel with known parameters");
  c_sim->add_option("--config", sim.config, "DGP config (key-value)")->check(CLI::ExistingFile);
  c_sim->add_option("--seed", sim.seed, "Seed");
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  McStudyOptions mc;
  auto* c_mc = app.add_subcommand("mc-study", "Monte Carlo study against the known parameters");
  c_mc->add_option("--config", mc.config, "DGP config (key-value)")->check(CLI::ExistingFile);
  c_mc->add_option("--spec", mc.spec, "Estimation spec (key-value)")->check(CLI::ExistingFile);
  c_mc->add_option("--replications", mc.replications, "Replications");
  c_mc->add_option("--seed", mc.seed, "Base seed; replication r uses seed + r");
  c_mc->add_flag("--effects", mc.effects, "Also estimate the treatment effects");
  c_mc->add_option("--out", mc.out, "Output directory")->required();

  auto* c_report = app.add_subcommand("report", "Collect the stage tables into one report");

  std::string run_config;
  std::string run_stages;
  auto* c_run = app.add_subcommand("run", "Run the pipeline from a run config");
  c_run->add_option("config", run_config, "Run config (key-value)")->required()->check(CLI::ExistingFile);
  c_run->add_option("--stages", run_stages, "Comma-separated stage list");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  setup_logging(verbose, quiet);

  const auto* active = app.get_subcommands().front();
  const std::string name = active->get_name();
  try {
    const RunDir run(run_dir);
    if (active == c_ingest) {
      stage_ingest(run, ingest);
    } else if (active == c_capital) {
      stage_capital(run, capital);
    } else if (active == c_spill) {
      stage_spillover(run, spill);
    } else if (active == c_est) {
      if (!est_spill.empty()) est.spillovers = est_spill == "on";
      stage_estimate(run, est);
    } else if (active == c_ate) {
      ate.zero_convention = ate_zero == "on";
      ate.bias_correction = ate_bc == "on";
      stage_ate(run, ate);
    } else if (active == c_sim) {
      stage_simulate(sim);
    } else if (active == c_mc) {
      stage_mc_study(mc);
    } else if (active == c_report) {
      stage_report(run);
    } else if (active == c_run) {
      run_pipeline(run_config, split_list(run_stages));
    }
  } catch (const Error& e) {
    spdlog::error("innoprod {}: {}", name, e.what());
    return 1;
  } catch (const std::exception& e) {
    spdlog::error("innoprod {}: unexpected failure: {}", name, e.what());
    return 1;
  }
  return 0;
}

}  // namespace innoprod::cli
