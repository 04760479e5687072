#include "termset/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include "termset/error.hpp"

namespace termset {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view kind) {
  throw UsageError(fmt::format("config key '{}': '{}' is not {}", key, value, kind));
}

template <typename T>
T parse_integer(std::string_view key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    bad_value(key, value, "a non-negative integer");
  }
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in) {
  KeyValueConfig config;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos)
      text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) {
      throw DataError(fmt::format("config line {}: expected key = value", number));
    }
    const auto key = trim(text.substr(0, eq));
    if (key.empty()) throw DataError(fmt::format("config line {}: empty key", number));
    config.set(std::string(key), std::string(trim(text.substr(eq + 1))));
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file " + path);
  return parse(in);
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

std::size_t KeyValueConfig::get_size(std::string_view key, std::size_t fallback) const {
  auto v = get(key);
  return v ? parse_integer<std::size_t>(key, *v) : fallback;
}

std::uint64_t KeyValueConfig::get_u64(std::string_view key, std::uint64_t fallback) const {
  auto v = get(key);
  return v ? parse_integer<std::uint64_t>(key, *v) : fallback;
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used != v->size() || !std::isfinite(d)) bad_value(key, *v, "a finite number");
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, *v, "a finite number");
  }
}

bool KeyValueConfig::get_bool(std::string_view key, bool fallback) const {
  auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  bad_value(key, *v, "a boolean");
}

void KeyValueConfig::check_known(const std::vector<std::string>& known) const {
  for (const auto& [key, value] : values_) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw UsageError(fmt::format("unknown config key '{}'", key));
    }
  }
}

}  // namespace termset
