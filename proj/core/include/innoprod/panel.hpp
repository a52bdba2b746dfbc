#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "innoprod/config.hpp"
#include "innoprod/csv.hpp"

namespace innoprod {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Eurostat technology/knowledge-intensity aggregation of NACE Rev. 2 divisions.
enum class TechClass : std::uint8_t {
  kHighTechMfg,
  kMediumHighTechMfg,
  kMediumLowTechMfg,
  kLowTechMfg,
  kKnowledgeIntensiveServices,
  kLessKnowledgeIntensiveServices,
  kUnknown,
};

std::string_view to_string(TechClass tc);
TechClass parse_tech_class(std::string_view text);
// Classification of a 2-digit NACE division code ("26" -> high-tech mfg).
TechClass tech_class_for_industry(std::string_view nace2);
// High-tech or medium-high-tech manufacturing.
bool is_high_or_medium_high(TechClass tc);

// One firm in one survey wave. Currency fields are nominal; `deflator` is the
// industry-year price index used by the capital stage.
struct FirmYear {
  std::string firm_id;
  int year = 0;
  double revenue = kMissing;
  double value_added = kMissing;
  double employees = kMissing;
  double capital_book = kMissing;
  double investment = kMissing;
  double depreciation = kMissing;
  double materials = kMissing;
  double rnd = kMissing;
  bool d_zero_rnd = false;
  bool prod_innov = false;
  bool proc_innov = false;
  bool innovator = false;
  std::string county;
  std::string industry;
  TechClass tech_class = TechClass::kUnknown;
  int age = 0;
  bool north = false;
  bool potential_innovator = false;
  double deflator = kMissing;

  // Columns appended by later stages; NaN until computed.
  double capital = kMissing;  // replacement value from the perpetual inventory
  double intra_rnd = kMissing;
  double inter_rnd = kMissing;

  bool has_capital() const { return capital == capital; }
  bool has_spillovers() const { return intra_rnd == intra_rnd && inter_rnd == inter_rnd; }
};

bool operator==(const FirmYear& a, const FirmYear& b);

// "<firm_id>/<year>" label used in error listings.
std::string record_label(const FirmYear& r);

// Ordering used everywhere a deterministic order matters: firm ids that are
// integers compare numerically and precede non-numeric ids, which compare
// lexicographically.
bool firm_id_less(std::string_view a, std::string_view b);

// Symmetric county-capital distance table (kilometres by default).
class CountyDistanceMatrix {
 public:
  CountyDistanceMatrix() = default;
  // Throws ValidationError unless square, symmetric, non-negative, zero on the
  // diagonal and strictly positive between distinct counties.
  CountyDistanceMatrix(std::vector<std::string> codes, std::vector<double> row_major,
                       std::string unit = "km");

  static CountyDistanceMatrix read(std::istream& in, char delimiter = ',', std::string unit = "km");
  static CountyDistanceMatrix load(const std::string& path, char delimiter = ',', std::string unit = "km");
  csv::Table to_table() const;

  std::size_t size() const { return codes_.size(); }
  const std::vector<std::string>& codes() const { return codes_; }
  const std::string& unit() const { return unit_; }
  // Throws LookupError for an unknown code.
  std::size_t index_of(std::string_view code) const;
  bool contains(std::string_view code) const { return index_.count(std::string(code)) > 0; }
  double distance(std::size_t i, std::size_t j) const { return values_[i * codes_.size() + j]; }
  double distance(std::string_view a, std::string_view b) const { return distance(index_of(a), index_of(b)); }

 private:
  std::vector<std::string> codes_;
  std::vector<double> values_;
  std::map<std::string, std::size_t> index_;
  std::string unit_ = "km";
};

// (industry, year) -> price index.
class DeflatorTable {
 public:
  void set(const std::string& industry, int year, double index);
  std::optional<double> find(const std::string& industry, int year) const;
  std::size_t size() const { return values_.size(); }

  static DeflatorTable read(std::istream& in, char delimiter = ',');
  static DeflatorTable load(const std::string& path, char delimiter = ',');
  csv::Table to_table() const;

 private:
  std::map<std::pair<std::string, int>, double> values_;
};

// Validated, immutable firm-year panel in canonical order (firm, then year).
class Panel {
 public:
  struct FirmSpan {
    std::string firm_id;
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t size() const { return end - begin; }
  };

  Panel() = default;

  // Sorts into canonical order and checks: no duplicate (firm, year), every
  // record has a positive deflator, employees >= 1. Throws IntegrityError or
  // ValidationError.
  static Panel from_records(std::vector<FirmYear> records, int wave_spacing = 1,
                            std::shared_ptr<const CountyDistanceMatrix> distances = nullptr);

  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const FirmYear& operator[](std::size_t i) const { return records_[i]; }
  std::span<const FirmYear> records() const { return records_; }
  std::span<const FirmSpan> firms() const { return firms_; }
  std::span<const FirmYear> firm_records(const FirmSpan& f) const {
    return std::span<const FirmYear>(records_).subspan(f.begin, f.size());
  }
  // Index of the firm that owns record i.
  std::size_t firm_of(std::size_t i) const { return firm_index_[i]; }

  // Previous observed wave of the same firm, whatever the calendar gap.
  std::optional<std::size_t> lag(std::size_t i) const {
    return lag_[i] < 0 ? std::nullopt : std::optional<std::size_t>(static_cast<std::size_t>(lag_[i]));
  }
  // Years between record i and its lag; 0 when there is no lag.
  int lag_gap(std::size_t i) const { return lag_gap_[i]; }

  int wave_spacing() const { return wave_spacing_; }
  const std::shared_ptr<const CountyDistanceMatrix>& distances() const { return distances_; }

  // Copy with a distance matrix attached.
  Panel with_distances(std::shared_ptr<const CountyDistanceMatrix> distances) const;
  // Copy with records replaced (re-validated). Used by stages that append columns.
  Panel with_records(std::vector<FirmYear> records) const;

  bool has_capital() const;
  bool has_spillovers() const;

 private:
  std::vector<FirmYear> records_;
  std::vector<FirmSpan> firms_;
  std::vector<std::size_t> firm_index_;
  std::vector<std::ptrdiff_t> lag_;
  std::vector<int> lag_gap_;
  int wave_spacing_ = 1;
  std::shared_ptr<const CountyDistanceMatrix> distances_;
};

// Logical field -> input column name. Fields absent from the mapping default
// to a column of the same name.
struct Schema {
  std::map<std::string, std::string> columns;
  char delimiter = ',';
  int wave_spacing = 1;

  static Schema from_config(const KeyValueConfig& cfg);
  KeyValueConfig to_config() const;
  std::string column_for(const std::string& field) const;
};

// Fields that must resolve to a column of the input.
const std::vector<std::string>& required_fields();
// Fields that are used when present.
const std::vector<std::string>& optional_fields();

struct IngestResult {
  Panel panel;
  std::size_t rows_read = 0;
  std::size_t dropped_potential_innovator = 0;
  std::size_t dropped_missing_value_added = 0;
  std::vector<std::string> drop_log;  // one "<firm>/<year>: reason" per dropped row
};

// Parses and validates a delimited panel. Rows flagged potential_innovator = 1
// are dropped and counted; value_added is derived from revenue - materials
// when absent (rows where that is impossible are dropped and logged); D0 and
// the innovator flag are derived.
IngestResult load_panel(std::istream& source, const Schema& schema, const DeflatorTable* deflators = nullptr);
IngestResult load_panel_file(const std::string& path, const Schema& schema, const DeflatorTable* deflators = nullptr);

// Canonical export (input field names plus any derived columns). Reloading it
// with Schema{} reproduces the retained records exactly.
csv::Table panel_to_table(const Panel& panel);
// Inverse of panel_to_table.
Panel panel_from_table(const csv::Table& table, int wave_spacing);

struct EntrantClassification {
  std::vector<std::uint8_t> entrant;  // per record, 1 = entrant
  std::size_t entrants = 0;
  std::size_t incumbents = 0;
};

// Entrant iff age <= max_age. Throws ValidationError listing negative ages.
EntrantClassification classify_entrant(const Panel& panel, int max_age = 8);

}  // namespace innoprod
