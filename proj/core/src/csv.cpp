#include "innoprod/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "innoprod/error.hpp"

namespace innoprod::csv {

namespace {

std::vector<std::string> split_line(const std::string& line, char delimiter) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cell.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      cells.push_back(std::move(cell));
      cell.clear();
    } else {
      cell.push_back(c);
    }
  }
  if (quoted) throw SchemaError("unterminated quoted cell in line: " + line);
  cells.push_back(std::move(cell));
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool needs_quotes(const std::string& cell, char delimiter) {
  return cell.find(delimiter) != std::string::npos || cell.find('"') != std::string::npos ||
         cell.find('\n') != std::string::npos;
}

}  // namespace

std::optional<std::size_t> Table::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) return std::nullopt;
  return static_cast<std::size_t>(it - header.begin());
}

Table read(std::istream& in, char delimiter) {
  Table table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (line.empty()) continue;
      for (auto& h : split_line(line, delimiter)) table.header.emplace_back(trim(h));
      have_header = true;
      continue;
    }
    if (line.empty()) continue;
    auto cells = split_line(line, delimiter);
    for (auto& c : cells) c = std::string(trim(c));
    if (cells.size() != table.header.size()) {
      throw SchemaError("row " + std::to_string(table.rows.size() + 2) + " has " +
                        std::to_string(cells.size()) + " cells, header has " +
                        std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw SchemaError("input has no header row");
  return table;
}

Table read_file(const std::string& path, char delimiter) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return read(in, delimiter);
}

void write(std::ostream& out, const Table& table, char delimiter) {
  auto emit = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out << delimiter;
      if (needs_quotes(cells[i], delimiter)) {
        out << '"';
        for (char c : cells[i]) {
          if (c == '"') out << '"';
          out << c;
        }
        out << '"';
      } else {
        out << cells[i];
      }
    }
    out << '\n';
  };
  emit(table.header);
  for (const auto& row : table.rows) emit(row);
}

void write_file(const std::string& path, const Table& table, char delimiter) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  write(out, table, delimiter);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "NA";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf.data(), ptr);
}

bool is_missing(std::string_view cell) {
  cell = trim(cell);
  return cell.empty() || cell == "NA" || cell == "." || cell == "nan" || cell == "NaN";
}

std::optional<double> parse_double(std::string_view cell) {
  cell = trim(cell);
  if (is_missing(cell)) return std::nullopt;
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ValidationError("not a number: '" + std::string(cell) + "'");
  }
  return value;
}

std::optional<long long> parse_int(std::string_view cell) {
  cell = trim(cell);
  if (is_missing(cell)) return std::nullopt;
  long long value = 0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    // Accept integral values written as decimals, e.g. "2010.0".
    auto as_double = parse_double(cell);
    if (as_double && std::floor(*as_double) == *as_double) return static_cast<long long>(*as_double);
    throw ValidationError("not an integer: '" + std::string(cell) + "'");
  }
  return value;
}

}  // namespace innoprod::csv
