#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "innoprod/csv.hpp"
#include "innoprod/panel.hpp"
#include "innoprod/prodfn.hpp"

namespace innoprod::cli {

namespace fs = std::filesystem;

// Run directory layout: <run>/<stage>/... plus <run>/manifest.json.
class RunDir {
 public:
  explicit RunDir(fs::path root);

  const fs::path& root() const { return root_; }
  fs::path stage(const std::string& name) const { return root_ / name; }
  fs::path ensure_stage(const std::string& name) const;

  // Throws DependencyError naming `producer` when the file is missing.
  fs::path require(const std::string& producer, const std::string& file) const;

 private:
  fs::path root_;
};

void write_text(const fs::path& path, const std::string& text);
std::string read_text(const fs::path& path);
void write_table(const fs::path& path, const csv::Table& table);

// Panel artifact: panel.csv plus panel_meta.txt (wave spacing).
void save_panel(const fs::path& dir, const Panel& panel);
Panel load_panel_artifact(const fs::path& dir);

// Estimation artifacts of one result.
void save_result(const fs::path& dir, const EstimationResult& result);
EstimationResult load_result(const fs::path& dir);

struct StageRecord {
  std::string name;
  std::string config_hash;
  std::uint64_t seed = 0;
  double seconds = 0;
  std::string status;
  std::map<std::string, std::string> artifacts;  // relative path -> digest
};

// manifest.json: config hash and seed of the invocation plus one entry per
// stage (later runs of a stage replace its entry).
void record_stage(const RunDir& run, const StageRecord& record);
// Sets the invocation-level config hash and seed.
void record_run(const RunDir& run, const std::string& config_hash, std::uint64_t seed);
std::string digest_file(const fs::path& path);
std::map<std::string, std::string> digest_dir(const fs::path& dir, const fs::path& relative_to);

}  // namespace innoprod::cli
