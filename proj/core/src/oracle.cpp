#include "innoprod/oracle.hpp"

#include <fmt/format.h>

#include <cmath>

#include "innoprod/capital.hpp"
#include "innoprod/error.hpp"
#include "innoprod/spillover.hpp"
#include "innoprod/stats.hpp"

namespace innoprod {

ReplicationRecord record_of(const EstimationResult& result) {
  ReplicationRecord rec;
  const bool has_se = result.variance.rows() == result.coef.size() && result.variance_method != VarianceMethod::kNone;
  for (std::size_t i = 0; i < result.names.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    rec.estimate[result.names[i]] = result.coef(j);
    if (has_se) rec.se[result.names[i]] = std::sqrt(std::max(result.variance(j, j), 0.0));
  }
  return rec;
}

void add_effects(ReplicationRecord& record, const FourEffects& effects, const ComplementarityTest* test) {
  for (const auto* e : {&effects.delta, &effects.d10, &effects.d01, &effects.d11}) {
    if (e->empty) continue;
    record.estimate[e->label] = e->estimate;
    record.se[e->label] = e->se;
  }
  if (test) {
    record.estimate["gap"] = test->gap;
    record.se["gap"] = test->se;
  }
}

const OracleRow& OracleReport::row(const std::string& name) const {
  for (const auto& r : rows) {
    if (r.name == name) return r;
  }
  throw LookupError("oracle report has no row " + name);
}

OracleReport oracle_report(const std::map<std::string, double>& truth, const std::vector<ReplicationRecord>& reps,
                           double level) {
  if (reps.empty()) throw ComparisonError("no replications to summarise");
  if (!(level > 0 && level < 1)) throw ValidationError("coverage level must lie in (0, 1)");
  const double z = normal_quantile(0.5 + level / 2);
  OracleReport report;
  for (const auto& [name, first] : reps.front().estimate) {
    (void)first;
    auto t = truth.find(name);
    if (t == truth.end()) throw ComparisonError("estimated parameter " + name + " has no ground truth");
    OracleRow row;
    row.name = name;
    row.truth = t->second;
    std::vector<double> values;
    bool all_se = true;
    std::size_t covered = 0;
    for (const auto& rep : reps) {
      auto it = rep.estimate.find(name);
      if (it == rep.estimate.end()) throw ComparisonError("replications disagree on parameter " + name);
      values.push_back(it->second);
      auto se = rep.se.find(name);
      if (se == rep.se.end()) {
        all_se = false;
      } else if (std::abs(it->second - row.truth) <= z * se->second) {
        ++covered;
      }
    }
    row.replications = values.size();
    row.mean = mean(values);
    row.bias = row.mean - row.truth;
    double sq = 0;
    for (double v : values) sq += (v - row.truth) * (v - row.truth);
    row.rmse = std::sqrt(sq / static_cast<double>(values.size()));
    if (values.size() >= 2) row.sd = sample_sd(values);
    if (all_se) row.coverage = static_cast<double>(covered) / static_cast<double>(values.size());
    report.rows.push_back(row);
  }
  return report;
}

csv::Table oracle_table(const OracleReport& report) {
  csv::Table t{{"parameter", "truth", "mean", "bias", "mc_sd", "rmse", "coverage", "replications"}, {}};
  for (const auto& r : report.rows) {
    t.rows.push_back({r.name, csv::format_double(r.truth), csv::format_double(r.mean), csv::format_double(r.bias),
                      r.sd ? csv::format_double(*r.sd) : "NA", csv::format_double(r.rmse),
                      r.coverage ? csv::format_double(*r.coverage) : "NA", std::to_string(r.replications)});
  }
  return t;
}

Panel prepare_panel(const Simulation& sim) {
  const auto cap = build_capital(sim.panel);
  return attach_spillovers(cap.panel, sim.distances);
}

Replication run_replication(const StudyOptions& options, int index) {
  Replication rep;
  rep.seed = options.seed + static_cast<std::uint64_t>(index);
  DgpConfig dgp = options.dgp;
  dgp.seed = rep.seed;
  try {
    const auto sim = generate_panel(dgp);
    rep.truth = sim.truth.parameters;
    const Panel panel = prepare_panel(sim);
    if (options.estimate || options.effects) {
      EstimationSpec spec = options.spec;
      spec.seed = rep.seed;
      if (!options.estimate) spec.variance = VarianceMethod::kNone;
      rep.result = estimate(panel, spec);
    }
    if (options.effects) {
      const auto series = residual_tfp(panel, *rep.result);
      const auto sample = build_match_sample(series, panel);
      rep.effects = four_effects(sample, options.match);
      rep.complementarity =
          complementarity_test(rep.effects->d10, rep.effects->d01, rep.effects->d11, options.zero_convention);
    }
  } catch (const Error& e) {
    rep.error = e.what();
  }
  return rep;
}

}  // namespace innoprod
