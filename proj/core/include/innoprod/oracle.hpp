#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "innoprod/csv.hpp"
#include "innoprod/mcsim.hpp"
#include "innoprod/prodfn.hpp"
#include "innoprod/treatment.hpp"

namespace innoprod {

// One replication's estimates (and standard errors where available), keyed by
// the ground-truth parameter names.
struct ReplicationRecord {
  std::map<std::string, double> estimate;
  std::map<std::string, double> se;
};

ReplicationRecord record_of(const EstimationResult& result);
void add_effects(ReplicationRecord& record, const FourEffects& effects, const ComplementarityTest* test = nullptr);

struct OracleRow {
  std::string name;
  double truth = 0;
  double mean = 0;
  double bias = 0;
  double rmse = 0;
  std::optional<double> sd;        // needs two replications
  std::optional<double> coverage;  // needs standard errors in every replication
  std::size_t replications = 0;
};

struct OracleReport {
  std::vector<OracleRow> rows;
  const OracleRow& row(const std::string& name) const;  // throws LookupError
};

// Bias, Monte Carlo SD, RMSE and normal-interval coverage per parameter.
// Throws ComparisonError when an estimated name has no truth or the
// replications disagree on their parameter sets.
OracleReport oracle_report(const std::map<std::string, double>& truth, const std::vector<ReplicationRecord>& reps,
                           double level = 0.95);
csv::Table oracle_table(const OracleReport& report);

// Capital and spillover stages applied to a simulated panel.
Panel prepare_panel(const Simulation& sim);

struct StudyOptions {
  DgpConfig dgp;
  EstimationSpec spec;
  MatchConfig match;
  bool estimate = true;
  bool effects = false;
  bool zero_convention = false;
  int replications = 10;
  std::uint64_t seed = 1;  // replication r simulates with seed + r
};

struct Replication {
  std::uint64_t seed = 0;
  std::map<std::string, double> truth;
  std::optional<EstimationResult> result;
  std::optional<FourEffects> effects;
  std::optional<ComplementarityTest> complementarity;
  std::string error;  // non-empty when the replication failed
};

Replication run_replication(const StudyOptions& options, int index);

}  // namespace innoprod
