#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "cli.hpp"
#include "innoprod/capital.hpp"
#include "innoprod/config.hpp"
#include "innoprod/describe.hpp"
#include "innoprod/error.hpp"
#include "innoprod/mcsim.hpp"
#include "innoprod/oracle.hpp"
#include "innoprod/prodfn.hpp"
#include "innoprod/report.hpp"
#include "innoprod/spillover.hpp"
#include "innoprod/treatment.hpp"

namespace innoprod::cli {

namespace {

std::string hash_of(const KeyValueConfig& kv) { return hex64(fnv1a64(kv.canonical())); }

void add_file(KeyValueConfig& kv, const std::string& key, const std::string& path) {
  if (path.empty()) return;
  kv.set(key, path);
  if (fs::exists(path)) kv.set(key + ".digest", digest_file(path));
}

void timed(const RunDir& run, const std::string& name, const KeyValueConfig& options, std::uint64_t seed,
           const std::function<void()>& body) {
  fs::create_directories(run.root());
  const auto t0 = std::chrono::steady_clock::now();
  StageRecord rec;
  rec.name = name;
  rec.config_hash = hash_of(options);
  rec.seed = seed;
  try {
    body();
    rec.status = "ok";
  } catch (...) {
    rec.status = "failed";
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record_stage(run, rec);
    throw;
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rec.artifacts = digest_dir(run.stage(name), run.root());
  record_stage(run, rec);
  spdlog::info("stage {} finished in {:.2f}s", name, rec.seconds);
}

char delimiter_of(const Schema& s) { return s.delimiter; }

Treatment treatment_of(const std::string& effect) {
  if (effect == "d10") return Treatment::kProductOnly;
  if (effect == "d01") return Treatment::kProcessOnly;
  if (effect == "d11") return Treatment::kBoth;
  return Treatment::kInnovator;
}

Panel panel_for_estimation(const RunDir& run, bool spillovers) {
  if (spillovers) {
    run.require("spillover", "panel.csv");
    return load_panel_artifact(run.stage("spillover"));
  }
  run.require("capital", "panel.csv");
  return load_panel_artifact(run.stage("capital"));
}

Panel filter_group(const Panel& panel, SampleGroup group, int max_age) {
  if (group == SampleGroup::kAll) return panel;
  std::vector<FirmYear> keep;
  for (const auto& r : panel.records()) {
    const bool entrant = r.age <= max_age;
    if ((group == SampleGroup::kEntrants) == entrant) keep.push_back(r);
  }
  return panel.with_records(std::move(keep));
}

csv::Table ate_rows(const std::vector<std::pair<std::string, FourEffects>>& groups,
                    const std::vector<std::string>& effects) {
  csv::Table t{{"group", "effect", "estimate", "se", "p_value", "percent", "treated", "controls", "matches",
                "unmatched_treated", "mean_outcome", "empty"},
               {}};
  for (const auto& [label, fe] : groups) {
    for (const auto* e : {&fe.delta, &fe.d10, &fe.d01, &fe.d11}) {
      if (std::find(effects.begin(), effects.end(), e->label) == effects.end()) continue;
      t.rows.push_back({label, e->label, csv::format_double(e->estimate), csv::format_double(e->se),
                        csv::format_double(e->p_value), csv::format_double(e->percent()), std::to_string(e->treated),
                        std::to_string(e->controls), std::to_string(e->matches), std::to_string(e->unmatched_treated),
                        csv::format_double(e->mean_outcome), e->empty ? "1" : "0"});
    }
  }
  return t;
}

}  // namespace

void stage_ingest(const RunDir& run, const IngestOptions& o) {
  KeyValueConfig kv;
  add_file(kv, "panel", o.panel);
  add_file(kv, "schema", o.schema);
  add_file(kv, "deflators", o.deflators);
  add_file(kv, "distances", o.distances);
  kv.set("distance_unit", o.distance_unit);
  kv.set("max_entrant_age", std::to_string(o.max_entrant_age));
  timed(run, "ingest", kv, 0, [&] {
    if (o.panel.empty()) throw ValidationError("ingest needs --panel");
    const Schema schema = o.schema.empty() ? Schema{} : Schema::from_config(KeyValueConfig::load(o.schema));
    std::optional<DeflatorTable> deflators;
    if (!o.deflators.empty()) deflators = DeflatorTable::load(o.deflators, delimiter_of(schema));
    const auto res = load_panel_file(o.panel, schema, deflators ? &*deflators : nullptr);
    const auto dir = run.ensure_stage("ingest");
    save_panel(dir, res.panel);
    std::string log = fmt::format("rows read: {}\nrows kept: {}\ndropped (potential innovator): {}\n"
                                  "dropped (value added underivable): {}\n",
                                  res.rows_read, res.panel.size(), res.dropped_potential_innovator,
                                  res.dropped_missing_value_added);
    for (const auto& l : res.drop_log) log += l + "\n";
    write_text(dir / "ingest_log.txt", log);
    if (!o.distances.empty()) {
      const auto dist = CountyDistanceMatrix::load(o.distances, ',', o.distance_unit);
      write_table(dir / "distances.csv", dist.to_table());
      write_text(dir / "distances_meta.txt", "unit = " + dist.unit() + "\n");
    }
    const auto rows = describe_groups(res.panel, o.max_entrant_age);
    write_text(dir / "descriptive.txt",
               "Descriptive statistics: entrants vs incumbents\n" + render_descriptive(rows));
    write_table(dir / "descriptive.csv", descriptive_table(rows));
  });
}

void stage_capital(const RunDir& run, const CapitalStageOptions& o) {
  KeyValueConfig kv;
  kv.set("per_period_life", o.per_period_life ? "true" : "false");
  kv.set("keep_flagged", o.keep_flagged ? "true" : "false");
  timed(run, "capital", kv, 0, [&] {
    run.require("ingest", "panel.csv");
    const Panel panel = load_panel_artifact(run.stage("ingest"));
    CapitalOptions opts;
    opts.per_period_life = o.per_period_life;
    opts.exclude_flagged = !o.keep_flagged;
    const auto res = build_capital(panel, opts);
    const auto dir = run.ensure_stage("capital");
    save_panel(dir, res.panel);
    write_table(dir / "capital_series.csv", capital_series_table(res.series));
    std::string excluded;
    for (const auto& f : res.excluded_firms) excluded += f + "\n";
    write_text(dir / "excluded_firms.txt", excluded);
  });
}

void stage_spillover(const RunDir& run, const SpilloverOptions& o) {
  KeyValueConfig kv;
  add_file(kv, "distances", o.distances);
  kv.set("distance_unit", o.distance_unit);
  timed(run, "spillover", kv, 0, [&] {
    run.require("capital", "panel.csv");
    std::shared_ptr<const CountyDistanceMatrix> dist;
    if (!o.distances.empty()) {
      dist = std::make_shared<const CountyDistanceMatrix>(CountyDistanceMatrix::load(o.distances, ',', o.distance_unit));
    } else if (fs::exists(run.stage("ingest") / "distances.csv")) {
      std::string unit = "km";
      const auto meta = run.stage("ingest") / "distances_meta.txt";
      if (fs::exists(meta)) unit = KeyValueConfig::load(meta.string()).get_string("unit", "km");
      dist = std::make_shared<const CountyDistanceMatrix>(
          CountyDistanceMatrix::load((run.stage("ingest") / "distances.csv").string(), ',', unit));
    } else {
      throw DependencyError("spillover needs a county distance matrix (--distances or ingest --distances)");
    }
    const Panel panel = attach_spillovers(load_panel_artifact(run.stage("capital")), dist);
    const auto dir = run.ensure_stage("spillover");
    save_panel(dir, panel);
    write_table(dir / "distances.csv", dist->to_table());
    write_text(dir / "spillover_meta.txt", "distance_unit = " + dist->unit() + "\n");
    csv::Table t{{"firm_id", "year", "intra_rnd", "inter_rnd", "log_intra", "log_inter", "intra_zero", "inter_zero"},
                 {}};
    for (const auto& r : panel.records()) {
      t.rows.push_back({r.firm_id, std::to_string(r.year), csv::format_double(r.intra_rnd),
                        csv::format_double(r.inter_rnd), csv::format_double(std::log1p(r.intra_rnd)),
                        csv::format_double(std::log1p(r.inter_rnd)), r.intra_rnd == 0 ? "1" : "0",
                        r.inter_rnd == 0 ? "1" : "0"});
    }
    write_table(dir / "spillover.csv", t);
  });
}

void stage_estimate(const RunDir& run, const EstimateOptions& o) {
  EstimationSpec spec;
  if (!o.spec.empty()) spec = EstimationSpec::from_config(KeyValueConfig::load(o.spec));
  if (o.estimator) spec.estimator = parse_estimator(*o.estimator);
  if (o.group) spec.group = parse_group(*o.group);
  if (o.spillovers) spec.spillovers = *o.spillovers;
  if (o.bootstrap) spec.bootstrap = *o.bootstrap;
  if (o.seed) spec.seed = *o.seed;
  if (o.variance) spec.variance = parse_variance(*o.variance);
  spec.validate();
  if (o.split != "none" && o.split != "entrants" && o.split != "hightech") {
    throw ValidationError("unknown split '" + o.split + "' (none, entrants, hightech)");
  }
  KeyValueConfig kv = spec.to_config();
  kv.set("split", o.split);
  timed(run, "estimate", kv, spec.seed, [&] {
    const Panel panel = panel_for_estimation(run, spec.spillovers);
    const auto dir = run.ensure_stage("estimate");
    for (const auto& e : fs::directory_iterator(dir)) fs::remove_all(e.path());
    write_text(dir / "spec.txt", spec.to_config().canonical());

    std::vector<std::string> labels;
    std::vector<EstimationResult> results;
    std::vector<std::optional<WaldTest>> tests;
    std::string title;
    std::string notice;
    if (o.split == "none") {
      results.push_back(estimate(panel, spec));
      labels.push_back(std::string(to_string(spec.group)));
      std::optional<WaldTest> w;
      if (spec.variance != VarianceMethod::kNone) {
        try {
          w = wald_equality(results.back(), "k", "k0");
        } catch (const UndefinedTestError& e) {
          spdlog::warn("capital equality test undefined: {}", e.what());
        }
      }
      tests.push_back(w);
      title = fmt::format("Production function estimates ({}, {} sample, spillovers {})",
                          spec.estimator == EstimatorKind::kAcf ? "ACF" : "OP", to_string(spec.group),
                          spec.spillovers ? "on" : "off");
    } else {
      const auto kind = o.split == "entrants" ? SplitKind::kEntrantIncumbent : SplitKind::kHighTech;
      auto split = group_split_estimation(panel, spec, kind);
      labels = split.group_labels;
      results = std::move(split.results);
      notice = split.notice;
      for (std::size_t i = 0; i < results.size(); ++i) tests.push_back(i + 1 == results.size() ? split.test : std::nullopt);
      title = kind == SplitKind::kEntrantIncumbent ? "Production function estimates by group"
                                                   : "Production function estimates with high-tech R&D interaction";
    }
    std::string groups;
    std::vector<const EstimationResult*> ptrs;
    for (std::size_t i = 0; i < results.size(); ++i) {
      save_result(dir / labels[i], results[i]);
      groups += labels[i] + "\n";
      ptrs.push_back(&results[i]);
    }
    write_text(dir / "groups.txt", groups);
    const std::string test_label = o.split == "none"       ? "Equality of capital elasticity with/without R&D"
                                   : o.split == "entrants" ? "Equality of R&D elasticity across groups"
                                                           : "Equality of R&D elasticity, D_HM vs other";
    auto table = production_table(title, labels, ptrs, tests, test_label);
    if (!notice.empty()) table.notes.push_back(notice);
    write_text(dir / "table.txt", render_text(table));
    write_table(dir / "table.csv", report_csv(table));
    csv::Table tt{{"group", "test", "statistic", "p_value"}, {}};
    for (std::size_t i = 0; i < tests.size(); ++i) {
      if (tests[i]) {
        tt.rows.push_back({labels[i], test_label, csv::format_double(tests[i]->statistic),
                           csv::format_double(tests[i]->p_value)});
      }
    }
    write_table(dir / "tests.csv", tt);
  });
}

void stage_ate(const RunDir& run, const AteOptions& o) {
  static const std::vector<std::string> all{"delta", "d10", "d01", "d11"};
  if (o.effect != "all" && std::find(all.begin(), all.end(), o.effect) == all.end()) {
    throw ValidationError("unknown effect '" + o.effect + "' (all, delta, d10, d01, d11)");
  }
  KeyValueConfig kv;
  kv.set("effect", o.effect);
  kv.set("neighbors", std::to_string(o.neighbors));
  kv.set("exact", o.exact.value_or("default"));
  kv.set("zero_convention", o.zero_convention ? "on" : "off");
  kv.set("bias_correction", o.bias_correction ? "on" : "off");
  kv.set("placebo", std::to_string(o.placebo));
  timed(run, "ate", kv, o.seed, [&] {
    run.require("estimate", "groups.txt");
    const auto spec = EstimationSpec::from_config(KeyValueConfig::load((run.stage("estimate") / "spec.txt").string()));
    std::vector<std::string> labels;
    {
      std::istringstream in(read_text(run.stage("estimate") / "groups.txt"));
      for (std::string l; std::getline(in, l);) {
        if (!l.empty()) labels.push_back(l);
      }
    }
    MatchConfig base;
    base.neighbors = o.neighbors;
    base.bias_correction = o.bias_correction;
    base.validate();
    const auto dir = run.ensure_stage("ate");
    for (const auto& e : fs::directory_iterator(dir)) fs::remove_all(e.path());

    std::vector<std::pair<std::string, FourEffects>> groups;
    std::vector<std::optional<ComplementarityTest>> tests;
    csv::Table comp{{"group", "gap", "se", "z", "p_value", "complementary", "zeroed"}, {}};
    csv::Table placebo{{"group", "permutation", "ate"}, {}};
    const std::vector<std::string> wanted = o.effect == "all" ? all : std::vector<std::string>{o.effect};
    for (const auto& label : labels) {
      const auto result = load_result(run.stage("estimate") / label);
      SampleGroup g = SampleGroup::kAll;
      if (label == "entrants" || label == "incumbents") g = parse_group(label);
      const Panel panel = filter_group(panel_for_estimation(run, result.spillovers), g, spec.max_entrant_age);
      const auto series = residual_tfp(panel, result);
      csv::Table st{{"firm_id", "year", "omega", "residual_tfp", "has_lag"}, {}};
      for (std::size_t i = 0; i < panel.size(); ++i) {
        st.rows.push_back({panel[i].firm_id, std::to_string(panel[i].year), csv::format_double(series.omega[i]),
                           csv::format_double(series.residual[i]), series.has_lag[i] ? "1" : "0"});
      }
      write_table(dir / fmt::format("series_{}.csv", label), st);
      const auto sample = build_match_sample(series, panel);

      FourEffects fe;
      fe.delta.label = "delta";
      fe.d10.label = "d10";
      fe.d01.label = "d01";
      fe.d11.label = "d11";
      fe.delta.empty = fe.d10.empty = fe.d01.empty = fe.d11.empty = true;
      auto run_one = [&](Treatment t, ExactMatch default_exact) {
        MatchConfig c = base;
        c.treatment = t;
        c.exact = o.exact && (o.effect != "all" || t == Treatment::kInnovator) ? parse_exact(*o.exact) : default_exact;
        try {
          return match_ate(sample, c);
        } catch (const NoOverlapError& e) {
          spdlog::warn("{} {}: {}", label, to_string(t), e.what());
          AteEstimate empty;
          empty.label = std::string(to_string(t));
          empty.empty = true;
          return empty;
        }
      };
      auto want = [&](const char* e) { return std::find(wanted.begin(), wanted.end(), e) != wanted.end(); };
      if (want("delta")) fe.delta = run_one(Treatment::kInnovator, ExactMatch::kYearIndustry);
      if (want("d10")) fe.d10 = run_one(Treatment::kProductOnly, ExactMatch::kYear);
      if (want("d01")) fe.d01 = run_one(Treatment::kProcessOnly, ExactMatch::kYear);
      if (want("d11")) fe.d11 = run_one(Treatment::kBoth, ExactMatch::kYear);

      std::optional<ComplementarityTest> test;
      if (o.effect == "all") {
        try {
          test = complementarity_test(fe.d10, fe.d01, fe.d11, o.zero_convention);
          std::string zeroed;
          for (const auto& z : test->zeroed) zeroed += (zeroed.empty() ? "" : ";") + z;
          comp.rows.push_back({label, csv::format_double(test->gap), csv::format_double(test->se),
                               csv::format_double(test->z), csv::format_double(test->p_value),
                               test->complementary ? "1" : "0", zeroed});
        } catch (const IncompleteInputsError& e) {
          spdlog::warn("{}: complementarity test skipped: {}", label, e.what());
        }
      }
      if (o.placebo > 0) {
        MatchConfig c = base;
        c.treatment = o.effect == "all" ? Treatment::kInnovator : treatment_of(o.effect);
        c.exact = o.exact ? parse_exact(*o.exact)
                          : (c.treatment == Treatment::kInnovator ? ExactMatch::kYearIndustry : ExactMatch::kYear);
        const auto draws = placebo_ates(sample, c, o.placebo, o.seed);
        for (std::size_t p = 0; p < draws.size(); ++p) {
          placebo.rows.push_back({label, std::to_string(p), csv::format_double(draws[p])});
        }
      }
      groups.emplace_back(label, fe);
      tests.push_back(test);
    }
    write_table(dir / "ate.csv", ate_rows(groups, wanted));
    write_table(dir / "complementarity.csv", comp);
    if (o.placebo > 0) write_table(dir / "placebo.csv", placebo);
    std::vector<const FourEffects*> ptrs;
    for (const auto& g : groups) ptrs.push_back(&g.second);
    const auto table = ate_table("Average treatment effects of innovation on productivity", labels, ptrs, tests);
    write_text(dir / "table.txt", render_text(table));
    write_table(dir / "table.csv", report_csv(table));
  });
}

void stage_simulate(const SimulateOptions& o) {
  if (o.out.empty()) throw ValidationError("simulate needs --out");
  DgpConfig cfg;
  if (!o.config.empty()) cfg = DgpConfig::from_config(KeyValueConfig::load(o.config));
  if (o.seed) cfg.seed = *o.seed;
  cfg.validate();
  const RunDir run(o.out);
  timed(run, "simulate", cfg.to_config(), cfg.seed, [&] {
    const auto sim = generate_panel(cfg);
    const auto dir = run.ensure_stage("simulate");
    write_table(dir / "panel.csv", panel_to_table(sim.panel));
    write_table(dir / "distances.csv", sim.distances->to_table());
    Schema schema;
    schema.wave_spacing = cfg.wave_spacing;
    write_text(dir / "schema.txt", schema.to_config().canonical());
    write_text(dir / "config.txt", cfg.to_config().canonical());
    write_truth(sim.truth, (dir / "truth").string());
  });
}

void stage_mc_study(const McStudyOptions& o) {
  if (o.out.empty()) throw ValidationError("mc-study needs --out");
  if (o.replications < 1) throw ValidationError("replications must be >= 1");
  StudyOptions s;
  if (!o.config.empty()) s.dgp = DgpConfig::from_config(KeyValueConfig::load(o.config));
  if (!o.spec.empty()) {
    s.spec = EstimationSpec::from_config(KeyValueConfig::load(o.spec));
  } else {
    s.spec.variance = VarianceMethod::kAnalytic;
  }
  if (s.dgp.mode == DgpMode::kCobbDouglas) s.spec.estimator = EstimatorKind::kOp;
  s.effects = o.effects;
  s.replications = o.replications;
  s.seed = o.seed;
  KeyValueConfig kv = s.dgp.to_config();
  const auto spec_kv = s.spec.to_config();
  for (const auto& [k, v] : spec_kv.values()) kv.set("spec." + k, v);
  kv.set("replications", std::to_string(o.replications));
  kv.set("effects", o.effects ? "true" : "false");
  const RunDir run(o.out);
  timed(run, "mc-study", kv, o.seed, [&] {
    const auto dir = run.ensure_stage("mc-study");
    std::vector<ReplicationRecord> records;
    std::map<std::string, double> truth;
    csv::Table reps{{"replication", "seed", "parameter", "estimate", "se", "truth"}, {}};
    csv::Table failures{{"replication", "seed", "error"}, {}};
    for (int r = 0; r < o.replications; ++r) {
      const auto rep = run_replication(s, r);
      if (!rep.error.empty()) {
        failures.rows.push_back({std::to_string(r), std::to_string(rep.seed), rep.error});
        spdlog::warn("replication {} failed: {}", r, rep.error);
        continue;
      }
      auto rec = record_of(*rep.result);
      if (rep.effects) add_effects(rec, *rep.effects, rep.complementarity ? &*rep.complementarity : nullptr);
      for (const auto& [name, value] : rec.estimate) {
        auto se = rec.se.find(name);
        auto t = rep.truth.find(name);
        reps.rows.push_back({std::to_string(r), std::to_string(rep.seed), name, csv::format_double(value),
                             se == rec.se.end() ? "NA" : csv::format_double(se->second),
                             t == rep.truth.end() ? "NA" : csv::format_double(t->second)});
      }
      records.push_back(std::move(rec));
      truth = rep.truth;
    }
    write_table(dir / "replications.csv", reps);
    write_table(dir / "failures.csv", failures);
    if (records.empty()) throw InferenceError("every replication failed");
    const auto report = oracle_report(truth, records);
    write_table(dir / "oracle.csv", oracle_table(report));
    std::string text = fmt::format("Monte Carlo study: {} replications ({} failed)\n", o.replications,
                                   failures.rows.size());
    text += fmt::format("{:<12}{:>10}{:>10}{:>10}{:>10}{:>10}{:>10}\n", "parameter", "truth", "mean", "bias", "mc_sd",
                        "rmse", "coverage");
    for (const auto& r : report.rows) {
      text += fmt::format("{:<12}{:>10.4f}{:>10.4f}{:>10.4f}{:>10}{:>10.4f}{:>10}\n", r.name, r.truth, r.mean, r.bias,
                          r.sd ? fmt::format("{:.4f}", *r.sd) : "NA", r.rmse,
                          r.coverage ? fmt::format("{:.3f}", *r.coverage) : "NA");
    }
    write_text(dir / "summary.txt", text);
  });
}

void stage_report(const RunDir& run) {
  timed(run, "report", KeyValueConfig{}, 0, [&] {
    std::string text;
    bool any = false;
    const std::vector<std::pair<std::string, std::string>> parts{
        {"ingest", "descriptive.txt"}, {"estimate", "table.txt"}, {"ate", "table.txt"}};
    for (const auto& [stage, file] : parts) {
      const auto p = run.stage(stage) / file;
      if (!fs::exists(p)) continue;
      text += read_text(p) + "\n";
      any = true;
    }
    if (!any) throw DependencyError("report found no stage outputs (run ingest, estimate or ate first)");
    const auto dir = run.ensure_stage("report");
    write_text(dir / "report.txt", text);
  });
}

}  // namespace innoprod::cli
