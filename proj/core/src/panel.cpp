#include "innoprod/panel.hpp"

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "innoprod/error.hpp"

namespace innoprod {

namespace {

bool same_value(double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; }

std::optional<long long> as_integer(std::string_view s) {
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

bool parse_flag(std::string_view cell, const std::string& field, const std::string& label) {
  auto v = csv::parse_double(cell);
  if (!v) throw ValidationError(fmt::format("{}: missing {}", label, field), {label});
  if (*v == 0.0) return false;
  if (*v == 1.0) return true;
  throw ValidationError(fmt::format("{}: {} must be 0 or 1", label, field), {label});
}

}  // namespace

std::string_view to_string(TechClass tc) {
  switch (tc) {
    case TechClass::kHighTechMfg: return "high_tech_mfg";
    case TechClass::kMediumHighTechMfg: return "medium_high_tech_mfg";
    case TechClass::kMediumLowTechMfg: return "medium_low_tech_mfg";
    case TechClass::kLowTechMfg: return "low_tech_mfg";
    case TechClass::kKnowledgeIntensiveServices: return "kis";
    case TechClass::kLessKnowledgeIntensiveServices: return "lkis";
    case TechClass::kUnknown: return "unknown";
  }
  return "unknown";
}

TechClass parse_tech_class(std::string_view text) {
  for (auto tc : {TechClass::kHighTechMfg, TechClass::kMediumHighTechMfg, TechClass::kMediumLowTechMfg,
                  TechClass::kLowTechMfg, TechClass::kKnowledgeIntensiveServices,
                  TechClass::kLessKnowledgeIntensiveServices, TechClass::kUnknown}) {
    if (to_string(tc) == text) return tc;
  }
  throw ValidationError("unknown tech_class '" + std::string(text) + "'");
}

TechClass tech_class_for_industry(std::string_view nace2) {
  auto code = as_integer(nace2);
  if (!code) return TechClass::kUnknown;
  const long long c = *code;
  if (c == 21 || c == 26) return TechClass::kHighTechMfg;
  if (c == 20 || (c >= 27 && c <= 30)) return TechClass::kMediumHighTechMfg;
  if (c == 19 || (c >= 22 && c <= 25) || c == 33) return TechClass::kMediumLowTechMfg;
  if ((c >= 10 && c <= 18) || c == 31 || c == 32) return TechClass::kLowTechMfg;
  if (c == 50 || c == 51 || (c >= 58 && c <= 66) || (c >= 69 && c <= 75) || c == 78 || c == 80 ||
      (c >= 84 && c <= 93)) {
    return TechClass::kKnowledgeIntensiveServices;
  }
  if (c >= 45 && c <= 99) return TechClass::kLessKnowledgeIntensiveServices;
  return TechClass::kUnknown;
}

bool is_high_or_medium_high(TechClass tc) {
  return tc == TechClass::kHighTechMfg || tc == TechClass::kMediumHighTechMfg;
}

bool operator==(const FirmYear& a, const FirmYear& b) {
  return a.firm_id == b.firm_id && a.year == b.year && same_value(a.revenue, b.revenue) &&
         same_value(a.value_added, b.value_added) && same_value(a.employees, b.employees) &&
         same_value(a.capital_book, b.capital_book) && same_value(a.investment, b.investment) &&
         same_value(a.depreciation, b.depreciation) && same_value(a.materials, b.materials) &&
         same_value(a.rnd, b.rnd) && a.d_zero_rnd == b.d_zero_rnd && a.prod_innov == b.prod_innov &&
         a.proc_innov == b.proc_innov && a.innovator == b.innovator && a.county == b.county &&
         a.industry == b.industry && a.tech_class == b.tech_class && a.age == b.age && a.north == b.north &&
         a.potential_innovator == b.potential_innovator && same_value(a.deflator, b.deflator) &&
         same_value(a.capital, b.capital) && same_value(a.intra_rnd, b.intra_rnd) &&
         same_value(a.inter_rnd, b.inter_rnd);
}

std::string record_label(const FirmYear& r) { return fmt::format("{}/{}", r.firm_id, r.year); }

bool firm_id_less(std::string_view a, std::string_view b) {
  auto ia = as_integer(a);
  auto ib = as_integer(b);
  if (ia && ib) return *ia != *ib ? *ia < *ib : a < b;
  if (ia) return true;
  if (ib) return false;
  return a < b;
}

// ---------------------------------------------------------------------------
// CountyDistanceMatrix

CountyDistanceMatrix::CountyDistanceMatrix(std::vector<std::string> codes, std::vector<double> row_major,
                                           std::string unit)
    : codes_(std::move(codes)), values_(std::move(row_major)), unit_(std::move(unit)) {
  const std::size_t n = codes_.size();
  if (values_.size() != n * n) throw ValidationError("distance matrix is not square");
  for (std::size_t i = 0; i < n; ++i) {
    if (!index_.emplace(codes_[i], i).second) {
      throw ValidationError("duplicate county code in distance matrix: " + codes_[i]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = values_[i * n + j];
      if (!(d >= 0.0) || !std::isfinite(d)) {
        throw ValidationError(fmt::format("distance {}-{} must be finite and non-negative", codes_[i], codes_[j]));
      }
      if (i == j && d != 0.0) throw ValidationError("distance matrix diagonal must be zero at " + codes_[i]);
      if (i != j && d == 0.0) {
        throw ValidationError(fmt::format("distinct counties {} and {} have zero distance", codes_[i], codes_[j]));
      }
      if (d != values_[j * n + i]) {
        throw ValidationError(fmt::format("distance matrix not symmetric at {}-{}", codes_[i], codes_[j]));
      }
    }
  }
}

CountyDistanceMatrix CountyDistanceMatrix::read(std::istream& in, char delimiter, std::string unit) {
  auto table = csv::read(in, delimiter);
  std::vector<std::string> codes(table.header.begin() + 1, table.header.end());
  if (table.rows.size() != codes.size()) throw ValidationError("distance matrix is not square");
  std::vector<double> values(codes.size() * codes.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.front() != codes[i]) {
      throw ValidationError(fmt::format("distance matrix row {} is labelled '{}', expected '{}'", i + 1,
                                        row.front(), codes[i]));
    }
    for (std::size_t j = 0; j < codes.size(); ++j) {
      auto v = csv::parse_double(row[j + 1]);
      if (!v) throw ValidationError(fmt::format("missing distance {}-{}", codes[i], codes[j]));
      values[i * codes.size() + j] = *v;
    }
  }
  return CountyDistanceMatrix(std::move(codes), std::move(values), std::move(unit));
}

CountyDistanceMatrix CountyDistanceMatrix::load(const std::string& path, char delimiter, std::string unit) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open distance matrix " + path);
  return read(in, delimiter, std::move(unit));
}

csv::Table CountyDistanceMatrix::to_table() const {
  csv::Table t;
  t.header.push_back("county");
  t.header.insert(t.header.end(), codes_.begin(), codes_.end());
  for (std::size_t i = 0; i < codes_.size(); ++i) {
    std::vector<std::string> row{codes_[i]};
    for (std::size_t j = 0; j < codes_.size(); ++j) row.push_back(csv::format_double(distance(i, j)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::size_t CountyDistanceMatrix::index_of(std::string_view code) const {
  auto it = index_.find(std::string(code));
  if (it == index_.end()) throw LookupError("unknown county code: " + std::string(code));
  return it->second;
}

// ---------------------------------------------------------------------------
// DeflatorTable

void DeflatorTable::set(const std::string& industry, int year, double index) {
  if (!(index > 0.0)) throw ValidationError(fmt::format("deflator for {}/{} must be positive", industry, year));
  values_[{industry, year}] = index;
}

std::optional<double> DeflatorTable::find(const std::string& industry, int year) const {
  auto it = values_.find({industry, year});
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

DeflatorTable DeflatorTable::read(std::istream& in, char delimiter) {
  auto table = csv::read(in, delimiter);
  auto ci = table.column("industry");
  auto cy = table.column("year");
  auto cv = table.column("index");
  if (!ci || !cy || !cv) throw SchemaError("deflator table needs columns industry, year, index");
  DeflatorTable out;
  for (const auto& row : table.rows) {
    auto year = csv::parse_int(row[*cy]);
    auto idx = csv::parse_double(row[*cv]);
    if (!year || !idx) throw ValidationError("deflator table has a missing cell");
    out.set(row[*ci], static_cast<int>(*year), *idx);
  }
  return out;
}

DeflatorTable DeflatorTable::load(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open deflator table " + path);
  return read(in, delimiter);
}

csv::Table DeflatorTable::to_table() const {
  csv::Table t{{"industry", "year", "index"}, {}};
  for (const auto& [key, value] : values_) {
    t.rows.push_back({key.first, std::to_string(key.second), csv::format_double(value)});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Panel

Panel Panel::from_records(std::vector<FirmYear> records, int wave_spacing,
                          std::shared_ptr<const CountyDistanceMatrix> distances) {
  if (wave_spacing < 1) throw ValidationError("wave spacing must be >= 1");
  std::stable_sort(records.begin(), records.end(), [](const FirmYear& a, const FirmYear& b) {
    if (a.firm_id != b.firm_id) return firm_id_less(a.firm_id, b.firm_id);
    return a.year < b.year;
  });

  std::vector<std::string> bad;
  for (const auto& r : records) {
    if (!(r.employees >= 1.0)) bad.push_back(record_label(r));
  }
  if (!bad.empty()) throw ValidationError("employees must be >= 1 for: " + fmt::format("{}", fmt::join(bad, ", ")), bad);
  for (const auto& r : records) {
    if (!(r.deflator > 0.0)) bad.push_back(record_label(r));
  }
  if (!bad.empty()) {
    throw ValidationError("missing or non-positive deflator for: " + fmt::format("{}", fmt::join(bad, ", ")), bad);
  }

  Panel p;
  p.wave_spacing_ = wave_spacing;
  p.distances_ = std::move(distances);
  p.lag_.assign(records.size(), -1);
  p.lag_gap_.assign(records.size(), 0);
  p.firm_index_.resize(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0 && records[i].firm_id == records[i - 1].firm_id) {
      if (records[i].year == records[i - 1].year) {
        throw IntegrityError(fmt::format("duplicate record for firm {}, year {}", records[i].firm_id, records[i].year));
      }
      p.lag_[i] = static_cast<std::ptrdiff_t>(i - 1);
      p.lag_gap_[i] = records[i].year - records[i - 1].year;
      p.firms_.back().end = i + 1;
    } else {
      p.firms_.push_back({records[i].firm_id, i, i + 1});
    }
    p.firm_index_[i] = p.firms_.size() - 1;
  }
  p.records_ = std::move(records);
  return p;
}

Panel Panel::with_distances(std::shared_ptr<const CountyDistanceMatrix> distances) const {
  Panel copy = *this;
  copy.distances_ = std::move(distances);
  return copy;
}

Panel Panel::with_records(std::vector<FirmYear> records) const {
  return from_records(std::move(records), wave_spacing_, distances_);
}

bool Panel::has_capital() const {
  return !records_.empty() &&
         std::any_of(records_.begin(), records_.end(), [](const FirmYear& r) { return r.has_capital(); });
}

bool Panel::has_spillovers() const {
  return !records_.empty() &&
         std::all_of(records_.begin(), records_.end(), [](const FirmYear& r) { return r.has_spillovers(); });
}

// ---------------------------------------------------------------------------
// Schema and ingestion

const std::vector<std::string>& required_fields() {
  static const std::vector<std::string> fields{
      "firm_id", "year",       "employees", "capital_book", "investment", "depreciation", "materials",
      "rnd",     "prod_innov", "proc_innov", "county",      "industry",   "age",          "north"};
  return fields;
}

const std::vector<std::string>& optional_fields() {
  static const std::vector<std::string> fields{"revenue",    "value_added", "potential_innovator",
                                               "deflator",   "tech_class",  "d_zero_rnd",
                                               "innovator",  "capital",     "intra_rnd",
                                               "inter_rnd"};
  return fields;
}

Schema Schema::from_config(const KeyValueConfig& cfg) {
  Schema s;
  std::set<std::string> known{"delimiter", "wave_spacing"};
  for (const auto& f : required_fields()) known.insert(f);
  for (const auto& f : optional_fields()) known.insert(f);
  cfg.require_known(known, "schema");
  for (const auto& [key, value] : cfg.values()) {
    if (key == "delimiter") {
      if (value == "comma" || value == ",") {
        s.delimiter = ',';
      } else if (value == "tab" || value == "\\t") {
        s.delimiter = '\t';
      } else if (value == "semicolon" || value == ";") {
        s.delimiter = ';';
      } else {
        throw SchemaError("unsupported delimiter: " + value);
      }
    } else if (key == "wave_spacing") {
      s.wave_spacing = static_cast<int>(cfg.get_int(key, 1));
    } else {
      s.columns[key] = value;
    }
  }
  return s;
}

KeyValueConfig Schema::to_config() const {
  KeyValueConfig cfg;
  for (const auto& [k, v] : columns) cfg.set(k, v);
  cfg.set("delimiter", delimiter == '\t' ? "tab" : delimiter == ';' ? "semicolon" : "comma");
  cfg.set("wave_spacing", std::to_string(wave_spacing));
  return cfg;
}

std::string Schema::column_for(const std::string& field) const {
  auto it = columns.find(field);
  return it == columns.end() ? field : it->second;
}

namespace {

struct ColumnMap {
  std::map<std::string, std::size_t> index;
  std::optional<std::size_t> get(const std::string& field) const {
    auto it = index.find(field);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

ColumnMap resolve_columns(const csv::Table& table, const Schema& schema) {
  ColumnMap map;
  std::vector<std::string> missing;
  for (const auto& f : required_fields()) {
    auto col = table.column(schema.column_for(f));
    if (!col) {
      missing.push_back(fmt::format("{} (column '{}')", f, schema.column_for(f)));
    } else {
      map.index[f] = *col;
    }
  }
  if (!missing.empty()) throw SchemaError("missing required column(s): " + fmt::format("{}", fmt::join(missing, ", ")));
  for (const auto& f : optional_fields()) {
    const bool mapped = schema.columns.count(f) > 0;
    auto col = table.column(schema.column_for(f));
    if (col) {
      map.index[f] = *col;
    } else if (mapped) {
      throw SchemaError(fmt::format("schema maps {} to column '{}', which is not in the header", f,
                                    schema.column_for(f)));
    }
  }
  if (!map.get("value_added") && !map.get("revenue")) {
    throw SchemaError("input needs a value_added or a revenue column");
  }
  return map;
}

double required_number(const std::vector<std::string>& row, const ColumnMap& cols, const std::string& field,
                       const std::string& label) {
  try {
    auto v = csv::parse_double(row[*cols.get(field)]);
    if (!v) throw ValidationError(fmt::format("{}: missing {}", label, field), {label});
    return *v;
  } catch (const ValidationError& e) {
    if (!e.offenders().empty()) throw;
    throw ValidationError(fmt::format("{}: {} ({})", label, e.what(), field), {label});
  }
}

double optional_number(const std::vector<std::string>& row, const ColumnMap& cols, const std::string& field,
                       const std::string& label) {
  auto c = cols.get(field);
  if (!c) return kMissing;
  try {
    auto v = csv::parse_double(row[*c]);
    return v ? *v : kMissing;
  } catch (const ValidationError& e) {
    throw ValidationError(fmt::format("{}: {} ({})", label, e.what(), field), {label});
  }
}

}  // namespace

IngestResult load_panel(std::istream& source, const Schema& schema, const DeflatorTable* deflators) {
  const auto table = csv::read(source, schema.delimiter);
  const auto cols = resolve_columns(table, schema);
  if (!cols.get("deflator") && deflators == nullptr) {
    throw SchemaError("no deflator column and no deflator table supplied");
  }

  IngestResult result;
  result.rows_read = table.rows.size();
  std::vector<FirmYear> records;
  records.reserve(table.rows.size());
  std::vector<std::string> invalid;
  std::vector<std::string> messages;

  for (const auto& row : table.rows) {
    FirmYear r;
    r.firm_id = row[*cols.get("firm_id")];
    auto year = csv::parse_int(row[*cols.get("year")]);
    if (r.firm_id.empty() || !year) {
      throw ValidationError("row with empty firm_id or year");
    }
    r.year = static_cast<int>(*year);
    const auto label = record_label(r);
    try {
      if (auto c = cols.get("potential_innovator"); c && !csv::is_missing(row[*c])) {
        r.potential_innovator = parse_flag(row[*c], "potential_innovator", label);
      }
      if (r.potential_innovator) {
        ++result.dropped_potential_innovator;
        result.drop_log.push_back(label + ": potentially innovative non-innovator");
        continue;
      }
      r.employees = required_number(row, cols, "employees", label);
      r.capital_book = required_number(row, cols, "capital_book", label);
      r.investment = required_number(row, cols, "investment", label);
      r.depreciation = required_number(row, cols, "depreciation", label);
      r.materials = required_number(row, cols, "materials", label);
      r.rnd = required_number(row, cols, "rnd", label);
      r.revenue = optional_number(row, cols, "revenue", label);
      r.value_added = optional_number(row, cols, "value_added", label);
      r.prod_innov = parse_flag(row[*cols.get("prod_innov")], "prod_innov", label);
      r.proc_innov = parse_flag(row[*cols.get("proc_innov")], "proc_innov", label);
      r.north = parse_flag(row[*cols.get("north")], "north", label);
      r.county = row[*cols.get("county")];
      r.industry = row[*cols.get("industry")];
      auto age = csv::parse_int(row[*cols.get("age")]);
      if (!age) throw ValidationError(label + ": missing age", {label});
      r.age = static_cast<int>(*age);
      r.capital = optional_number(row, cols, "capital", label);
      r.intra_rnd = optional_number(row, cols, "intra_rnd", label);
      r.inter_rnd = optional_number(row, cols, "inter_rnd", label);

      if (auto c = cols.get("tech_class"); c && !csv::is_missing(row[*c])) {
        r.tech_class = parse_tech_class(row[*c]);
      } else {
        r.tech_class = tech_class_for_industry(r.industry);
      }

      if (auto c = cols.get("deflator"); c && !csv::is_missing(row[*c])) {
        r.deflator = required_number(row, cols, "deflator", label);
      } else if (deflators) {
        if (auto d = deflators->find(r.industry, r.year)) r.deflator = *d;
      }

      if (r.investment < 0 || r.depreciation < 0 || r.materials < 0 || r.rnd < 0 || r.capital_book < 0) {
        throw ValidationError(label + ": negative currency amount", {label});
      }
      if (r.revenue == r.revenue && !(r.revenue > 0)) {
        throw ValidationError(label + ": revenue must be strictly positive", {label});
      }

      r.d_zero_rnd = r.rnd == 0.0;
      r.innovator = r.prod_innov || r.proc_innov;
      if (auto c = cols.get("d_zero_rnd"); c && !csv::is_missing(row[*c])) {
        if (parse_flag(row[*c], "d_zero_rnd", label) != r.d_zero_rnd) {
          throw ValidationError(label + ": d_zero_rnd disagrees with rnd", {label});
        }
      }
      if (auto c = cols.get("innovator"); c && !csv::is_missing(row[*c])) {
        if (parse_flag(row[*c], "innovator", label) != r.innovator) {
          throw ValidationError(label + ": innovator disagrees with prod_innov/proc_innov", {label});
        }
      }

      const bool have_va = r.value_added == r.value_added;
      const bool have_rev = r.revenue == r.revenue;
      if (!have_va) {
        if (!have_rev) {
          ++result.dropped_missing_value_added;
          result.drop_log.push_back(label + ": value added missing and not derivable");
          spdlog::info("dropping {}: value added missing and revenue absent", label);
          continue;
        }
        r.value_added = r.revenue - r.materials;
      } else if (have_rev) {
        const double derived = r.revenue - r.materials;
        const double scale = std::max({std::abs(r.revenue), std::abs(r.materials), 1.0});
        if (std::abs(derived - r.value_added) > 1e-9 * scale) {
          throw ValidationError(label + ": value_added differs from revenue - materials", {label});
        }
      }
    } catch (const ValidationError& e) {
      invalid.push_back(label);
      messages.emplace_back(e.what());
      continue;
    }
    records.push_back(std::move(r));
  }

  for (const auto& r : records) {
    if (!(r.employees >= 1.0) || !(r.deflator > 0.0)) {
      invalid.push_back(record_label(r));
      messages.push_back(record_label(r) + (!(r.employees >= 1.0) ? ": employees must be >= 1"
                                                                   : ": missing or non-positive deflator"));
    }
  }
  if (!invalid.empty()) {
    throw ValidationError(fmt::format("{} invalid row(s): {}", invalid.size(), fmt::join(messages, "; ")), invalid);
  }

  result.panel = Panel::from_records(std::move(records), schema.wave_spacing);
  return result;
}

IngestResult load_panel_file(const std::string& path, const Schema& schema, const DeflatorTable* deflators) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open panel " + path);
  return load_panel(in, schema, deflators);
}

csv::Table panel_to_table(const Panel& panel) {
  csv::Table t;
  t.header = {"firm_id",    "year",       "revenue",    "value_added", "employees", "capital_book",
              "investment", "depreciation", "materials", "rnd",        "d_zero_rnd", "prod_innov",
              "proc_innov", "innovator",  "county",     "industry",    "tech_class", "age",
              "north",      "potential_innovator", "deflator"};
  const bool with_capital = panel.has_capital();
  const bool with_spill = panel.has_spillovers();
  if (with_capital) t.header.push_back("capital");
  if (with_spill) {
    for (const char* h : {"intra_rnd", "inter_rnd", "log_intra_rnd", "log_inter_rnd", "intra_zero", "inter_zero"}) {
      t.header.push_back(h);
    }
  }
  auto flag = [](bool b) { return std::string(b ? "1" : "0"); };
  for (const auto& r : panel.records()) {
    std::vector<std::string> row{r.firm_id,
                                 std::to_string(r.year),
                                 csv::format_double(r.revenue),
                                 csv::format_double(r.value_added),
                                 csv::format_double(r.employees),
                                 csv::format_double(r.capital_book),
                                 csv::format_double(r.investment),
                                 csv::format_double(r.depreciation),
                                 csv::format_double(r.materials),
                                 csv::format_double(r.rnd),
                                 flag(r.d_zero_rnd),
                                 flag(r.prod_innov),
                                 flag(r.proc_innov),
                                 flag(r.innovator),
                                 r.county,
                                 r.industry,
                                 std::string(to_string(r.tech_class)),
                                 std::to_string(r.age),
                                 flag(r.north),
                                 flag(r.potential_innovator),
                                 csv::format_double(r.deflator)};
    if (with_capital) row.push_back(csv::format_double(r.capital));
    if (with_spill) {
      row.push_back(csv::format_double(r.intra_rnd));
      row.push_back(csv::format_double(r.inter_rnd));
      row.push_back(csv::format_double(std::log1p(r.intra_rnd)));
      row.push_back(csv::format_double(std::log1p(r.inter_rnd)));
      row.push_back(flag(r.intra_rnd == 0.0));
      row.push_back(flag(r.inter_rnd == 0.0));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

Panel panel_from_table(const csv::Table& table, int wave_spacing) {
  std::vector<std::string> lines;
  std::string text;
  {
    std::ostringstream out;
    csv::write(out, table);
    text = out.str();
  }
  std::istringstream in(text);
  Schema schema;
  schema.wave_spacing = wave_spacing;
  return load_panel(in, schema).panel;
}

EntrantClassification classify_entrant(const Panel& panel, int max_age) {
  EntrantClassification out;
  out.entrant.resize(panel.size());
  std::vector<std::string> bad;
  for (std::size_t i = 0; i < panel.size(); ++i) {
    const auto& r = panel[i];
    if (r.age < 0) {
      bad.push_back(record_label(r));
      continue;
    }
    out.entrant[i] = r.age <= max_age ? 1 : 0;
    (out.entrant[i] ? out.entrants : out.incumbents)++;
  }
  if (!bad.empty()) throw ValidationError("negative age for: " + fmt::format("{}", fmt::join(bad, ", ")), bad);
  return out;
}

}  // namespace innoprod
