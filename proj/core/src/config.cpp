#include "innoprod/config.hpp"

#include <fmt/format.h>

#include <fstream>
#include <istream>
#include <sstream>

#include "innoprod/csv.hpp"
#include "innoprod/error.hpp"

namespace innoprod {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw SchemaError(fmt::format("config line {}: expected key = value", lineno));
    }
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw SchemaError(fmt::format("config line {}: empty key", lineno));
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse(in);
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  return parse(in);
}

std::string KeyValueConfig::get_string(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw SchemaError("missing config key: " + key);
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key) const {
  const auto text = get_string(key);
  try {
    auto v = csv::parse_double(text);
    if (!v) throw SchemaError("config key " + key + " is empty");
    return *v;
  } catch (const ValidationError&) {
    throw SchemaError("config key " + key + " is not a number: " + text);
  }
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  if (!has(key)) return fallback;
  const auto text = get_string(key);
  try {
    auto v = csv::parse_int(text);
    if (!v) throw SchemaError("config key " + key + " is empty");
    return *v;
  } catch (const ValidationError&) {
    throw SchemaError("config key " + key + " is not an integer: " + text);
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const auto v = get_string(key);
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw SchemaError("config key " + key + " is not a boolean: " + v);
}

std::vector<double> KeyValueConfig::get_doubles(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get_string(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto v = csv::parse_double(item);
    if (!v) throw SchemaError("config key " + key + " has an empty list item");
    out.push_back(*v);
  }
  return out;
}

void KeyValueConfig::require_known(const std::set<std::string>& known, std::string_view context) const {
  for (const auto& [key, value] : values_) {
    if (!known.count(key)) {
      throw SchemaError(fmt::format("unknown key '{}' in {} config", key, context));
    }
  }
}

std::string KeyValueConfig::canonical() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) { return fmt::format("{:016x}", value); }

}  // namespace innoprod
