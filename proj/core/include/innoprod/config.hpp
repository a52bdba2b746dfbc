#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace innoprod {

// Plain `key = value` configuration text. `#` starts a comment; blank lines are
// ignored; later keys override earlier ones.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig parse_string(std::string_view text);
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }

  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key) const;

  const std::map<std::string, std::string>& values() const { return values_; }

  // Throws SchemaError naming the first key not in `known`.
  void require_known(const std::set<std::string>& known, std::string_view context) const;

  // Canonical sorted `key = value` text, stable across key order in the file.
  std::string canonical() const;

 private:
  std::map<std::string, std::string> values_;
};

// 64-bit FNV-1a; used for manifest and artifact digests.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace innoprod
