#include "artifacts.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "innoprod/config.hpp"
#include "innoprod/error.hpp"

namespace innoprod::cli {

RunDir::RunDir(fs::path root) : root_(std::move(root)) {}

fs::path RunDir::ensure_stage(const std::string& name) const {
  const auto p = stage(name);
  fs::create_directories(p);
  return p;
}

fs::path RunDir::require(const std::string& producer, const std::string& file) const {
  const auto p = stage(producer) / file;
  if (!fs::exists(p)) {
    throw DependencyError(fmt::format("missing {} (run the '{}' stage first)", p.string(), producer));
  }
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_table(const fs::path& path, const csv::Table& table) { csv::write_file(path.string(), table); }

void save_panel(const fs::path& dir, const Panel& panel) {
  write_table(dir / "panel.csv", panel_to_table(panel));
  KeyValueConfig meta;
  meta.set("wave_spacing", std::to_string(panel.wave_spacing()));
  meta.set("rows", std::to_string(panel.size()));
  meta.set("firms", std::to_string(panel.firms().size()));
  write_text(dir / "panel_meta.txt", meta.canonical());
}

Panel load_panel_artifact(const fs::path& dir) {
  const auto meta = KeyValueConfig::load((dir / "panel_meta.txt").string());
  return panel_from_table(csv::read_file((dir / "panel.csv").string()),
                          static_cast<int>(meta.get_int("wave_spacing", 1)));
}

namespace {

double cell_double(const std::vector<std::string>& row, std::size_t c) {
  auto v = csv::parse_double(row.at(c));
  return v ? *v : std::nan("");
}

std::size_t need(const csv::Table& t, const char* name, const fs::path& path) {
  auto c = t.column(name);
  if (!c) throw SchemaError(fmt::format("{} lacks column {}", path.string(), name));
  return *c;
}

csv::Table named_vector(const std::vector<std::string>& names, const VectorXd& v) {
  csv::Table t{{"name", "coef"}, {}};
  for (std::size_t i = 0; i < names.size(); ++i) {
    t.rows.push_back({names[i], csv::format_double(v(static_cast<Eigen::Index>(i)))});
  }
  return t;
}

void read_named_vector(const fs::path& path, std::vector<std::string>& names, VectorXd& v) {
  const auto t = csv::read_file(path.string());
  const auto cn = need(t, "name", path), cc = need(t, "coef", path);
  names.clear();
  v.resize(static_cast<Eigen::Index>(t.rows.size()));
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    names.push_back(t.rows[i][cn]);
    v(static_cast<Eigen::Index>(i)) = cell_double(t.rows[i], cc);
  }
}

}  // namespace

void save_result(const fs::path& dir, const EstimationResult& r) {
  fs::create_directories(dir);
  const bool has_var = r.variance.rows() == r.coef.size();
  csv::Table coef{{"name", "label", "coef", "se"}, {}};
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    const auto j = static_cast<Eigen::Index>(i);
    coef.rows.push_back({r.names[i], r.labels[i], csv::format_double(r.coef(j)),
                         has_var ? csv::format_double(std::sqrt(std::max(r.variance(j, j), 0.0))) : "NA"});
  }
  write_table(dir / "coefficients.csv", coef);

  csv::Table cov{{"name"}, {}};
  for (const auto& n : r.names) cov.header.push_back(n);
  for (std::size_t i = 0; i < r.names.size(); ++i) {
    std::vector<std::string> row{r.names[i]};
    for (std::size_t j = 0; j < r.names.size(); ++j) {
      row.push_back(has_var ? csv::format_double(r.variance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
                            : "NA");
    }
    cov.rows.push_back(std::move(row));
  }
  write_table(dir / "covariance.csv", cov);
  write_table(dir / "g_coefficients.csv", named_vector(r.g_names, r.g_coef));
  write_table(dir / "dummies.csv", named_vector(r.dummy_names, r.dummy_coef));
  write_table(dir / "extra.csv", named_vector(r.extra_names, r.extra_coef));
  write_table(dir / "moments.csv", named_vector(r.instrument_names, r.moments));

  csv::Table om{{"firm_id", "year", "omega", "phi", "residual", "has_lag"}, {}};
  for (std::size_t i = 0; i < r.firm_id.size(); ++i) {
    om.rows.push_back({r.firm_id[i], std::to_string(r.year[i]), csv::format_double(r.omega[i]),
                       csv::format_double(r.phi[i]), csv::format_double(r.residual[i]), r.has_lag[i] ? "1" : "0"});
  }
  write_table(dir / "omega.csv", om);

  KeyValueConfig meta;
  meta.set("estimator", std::string(to_string(r.estimator)));
  meta.set("group", std::string(to_string(r.group)));
  meta.set("spillovers", r.spillovers ? "true" : "false");
  meta.set("variance_method", std::string(to_string(r.variance_method)));
  meta.set("bootstrap_replicates", std::to_string(r.bootstrap_replicates));
  meta.set("bootstrap_failed", std::to_string(r.bootstrap_failed));
  meta.set("intercept", csv::format_double(r.intercept));
  meta.set("intercept0", csv::format_double(r.intercept0));
  meta.set("objective", csv::format_double(r.objective));
  meta.set("iterations", std::to_string(r.iterations));
  meta.set("converged", r.converged ? "true" : "false");
  meta.set("first_stage_r2", csv::format_double(r.first_stage_r2));
  meta.set("n_obs", std::to_string(r.n_obs));
  meta.set("n_firms", std::to_string(r.n_firms));
  meta.set("n_lagged", std::to_string(r.n_lagged));
  meta.set("dropped_zero_investment", std::to_string(r.dropped_zero_investment));
  meta.set("zero_investment_share", csv::format_double(r.zero_investment_share));
  write_text(dir / "result.txt", meta.canonical());
}

EstimationResult load_result(const fs::path& dir) {
  if (!fs::exists(dir / "result.txt")) throw DependencyError("missing estimation result in " + dir.string());
  EstimationResult r;
  const auto meta = KeyValueConfig::load((dir / "result.txt").string());
  r.estimator = parse_estimator(meta.get_string("estimator"));
  r.group = parse_group(meta.get_string("group"));
  r.spillovers = meta.get_bool("spillovers", true);
  r.variance_method = parse_variance(meta.get_string("variance_method"));
  r.bootstrap_replicates = static_cast<std::size_t>(meta.get_int("bootstrap_replicates", 0));
  r.bootstrap_failed = static_cast<std::size_t>(meta.get_int("bootstrap_failed", 0));
  r.intercept = meta.get_double("intercept");
  r.intercept0 = meta.get_double("intercept0");
  r.objective = meta.get_double("objective");
  r.iterations = static_cast<int>(meta.get_int("iterations", 0));
  r.converged = meta.get_bool("converged", false);
  r.first_stage_r2 = meta.get_double("first_stage_r2");
  r.n_obs = static_cast<std::size_t>(meta.get_int("n_obs", 0));
  r.n_firms = static_cast<std::size_t>(meta.get_int("n_firms", 0));
  r.n_lagged = static_cast<std::size_t>(meta.get_int("n_lagged", 0));
  r.dropped_zero_investment = static_cast<std::size_t>(meta.get_int("dropped_zero_investment", 0));
  r.zero_investment_share = meta.get_double("zero_investment_share", 0.0);

  const auto cpath = dir / "coefficients.csv";
  const auto ct = csv::read_file(cpath.string());
  const auto cn = need(ct, "name", cpath), cl = need(ct, "label", cpath), cc = need(ct, "coef", cpath);
  r.coef.resize(static_cast<Eigen::Index>(ct.rows.size()));
  for (std::size_t i = 0; i < ct.rows.size(); ++i) {
    r.names.push_back(ct.rows[i][cn]);
    r.labels.push_back(ct.rows[i][cl]);
    r.coef(static_cast<Eigen::Index>(i)) = cell_double(ct.rows[i], cc);
  }
  const auto vt = csv::read_file((dir / "covariance.csv").string());
  r.variance = MatrixXd::Zero(r.coef.size(), r.coef.size());
  for (std::size_t i = 0; i < vt.rows.size() && i < r.names.size(); ++i) {
    for (std::size_t j = 0; j < r.names.size(); ++j) {
      r.variance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cell_double(vt.rows[i], j + 1);
    }
  }
  if (!r.variance.allFinite()) r.variance = MatrixXd::Zero(r.coef.size(), r.coef.size());
  read_named_vector(dir / "g_coefficients.csv", r.g_names, r.g_coef);
  read_named_vector(dir / "dummies.csv", r.dummy_names, r.dummy_coef);
  read_named_vector(dir / "extra.csv", r.extra_names, r.extra_coef);
  read_named_vector(dir / "moments.csv", r.instrument_names, r.moments);

  const auto opath = dir / "omega.csv";
  const auto ot = csv::read_file(opath.string());
  const auto of = need(ot, "firm_id", opath), oy = need(ot, "year", opath), oo = need(ot, "omega", opath),
             op = need(ot, "phi", opath), orr = need(ot, "residual", opath), ol = need(ot, "has_lag", opath);
  for (const auto& row : ot.rows) {
    r.firm_id.push_back(row[of]);
    r.year.push_back(static_cast<int>(csv::parse_int(row[oy]).value_or(0)));
    r.omega.push_back(cell_double(row, oo));
    r.phi.push_back(cell_double(row, op));
    r.residual.push_back(cell_double(row, orr));
    r.has_lag.push_back(row[ol] == "1");
  }
  return r;
}

std::string digest_file(const fs::path& path) { return hex64(fnv1a64(read_text(path))); }

std::map<std::string, std::string> digest_dir(const fs::path& dir, const fs::path& relative_to) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    out[fs::relative(e.path(), relative_to).generic_string()] = digest_file(e.path());
  }
  return out;
}

void record_stage(const RunDir& run, const StageRecord& record) {
  using nlohmann::json;
  const auto path = run.root() / "manifest.json";
  json manifest = json::object();
  if (fs::exists(path)) {
    try {
      manifest = json::parse(read_text(path));
    } catch (const json::exception&) {
      manifest = json::object();
    }
  }
  if (!manifest.contains("stages") || !manifest["stages"].is_array()) manifest["stages"] = json::array();
  json entry{{"name", record.name},     {"config_hash", record.config_hash}, {"seed", record.seed},
             {"seconds", record.seconds}, {"status", record.status},         {"artifacts", record.artifacts}};
  auto& stages = manifest["stages"];
  auto it = std::find_if(stages.begin(), stages.end(), [&](const json& s) { return s.value("name", "") == record.name; });
  if (it != stages.end()) {
    *it = entry;
  } else {
    stages.push_back(entry);
  }
  if (!manifest.contains("config_hash")) {
    manifest["config_hash"] = record.config_hash;
    manifest["seed"] = record.seed;
  }
  write_text(path, manifest.dump(2) + "\n");
}

void record_run(const RunDir& run, const std::string& config_hash, std::uint64_t seed) {
  using nlohmann::json;
  const auto path = run.root() / "manifest.json";
  json manifest = json::object();
  if (fs::exists(path)) {
    try {
      manifest = json::parse(read_text(path));
    } catch (const json::exception&) {
      manifest = json::object();
    }
  }
  manifest["config_hash"] = config_hash;
  manifest["seed"] = seed;
  if (!manifest.contains("stages")) manifest["stages"] = json::array();
  write_text(path, manifest.dump(2) + "\n");
}

}  // namespace innoprod::cli
