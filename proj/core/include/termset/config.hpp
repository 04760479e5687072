#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace termset {

// Flat "key = value" settings. '#' starts a comment; blank lines are ignored.
// Later assignments (including command-line overrides) replace earlier ones.
class KeyValueConfig {
 public:
  // Throws DataError with the line number on malformed lines.
  static KeyValueConfig parse(std::istream& in);
  static KeyValueConfig load(const std::string& path);

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  bool has(std::string_view key) const { return values_.find(key) != values_.end(); }
  std::optional<std::string> get(std::string_view key) const;

  std::string get_string(std::string_view key, std::string fallback) const;
  std::size_t get_size(std::string_view key, std::size_t fallback) const;
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  // Throws UsageError naming the first key outside `known`.
  void check_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace termset
