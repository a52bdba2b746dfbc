#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace innoprod::csv {

// Delimited text table held in memory: one header row plus string cells.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
};

// Reads a delimited stream with a header row. Double-quoted cells may contain
// the delimiter and doubled quotes. A UTF-8 BOM on the first line is skipped.
Table read(std::istream& in, char delimiter = ',');
Table read_file(const std::string& path, char delimiter = ',');

void write(std::ostream& out, const Table& table, char delimiter = ',');
void write_file(const std::string& path, const Table& table, char delimiter = ',');

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Strict parse: the whole cell must be a number. Empty, "NA", "." and "nan"
// cells are reported as missing (nullopt); anything else malformed throws.
std::optional<double> parse_double(std::string_view cell);
std::optional<long long> parse_int(std::string_view cell);

bool is_missing(std::string_view cell);

}  // namespace innoprod::csv
