#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "artifacts.hpp"

namespace innoprod::cli {

struct IngestOptions {
  std::string panel;
  std::string schema;      // key-value file; empty = identity mapping
  std::string deflators;   // optional CSV
  std::string distances;   // optional CSV, copied into the run
  std::string distance_unit = "km";
  int max_entrant_age = 8;
};

struct CapitalStageOptions {
  bool per_period_life = false;
  bool keep_flagged = false;
};

struct SpilloverOptions {
  std::string distances;  // empty = the matrix stored by ingest
  std::string distance_unit = "km";  // used with `distances`
};

struct EstimateOptions {
  std::string spec;  // key-value file
  std::optional<std::string> estimator;
  std::optional<std::string> group;
  std::optional<bool> spillovers;
  std::optional<int> bootstrap;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variance;
  std::string split = "none";  // none, entrants, hightech
};

struct AteOptions {
  std::string effect = "all";
  int neighbors = 1;
  std::optional<std::string> exact;
  bool zero_convention = false;
  bool bias_correction = false;
  int placebo = 0;
  std::uint64_t seed = 1;
};

struct SimulateOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct McStudyOptions {
  std::string config;
  std::string spec;
  int replications = 50;
  std::uint64_t seed = 1;
  bool effects = false;
  std::string out;
};

void stage_ingest(const RunDir& run, const IngestOptions& o);
void stage_capital(const RunDir& run, const CapitalStageOptions& o);
void stage_spillover(const RunDir& run, const SpilloverOptions& o);
void stage_estimate(const RunDir& run, const EstimateOptions& o);
void stage_ate(const RunDir& run, const AteOptions& o);
void stage_simulate(const SimulateOptions& o);
void stage_mc_study(const McStudyOptions& o);
void stage_report(const RunDir& run);

// Pipeline driven by a key-value run config.
void run_pipeline(const std::string& config_path, const std::vector<std::string>& stage_override);

// Entry point shared by main() and the tests. Returns the process exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace innoprod::cli
