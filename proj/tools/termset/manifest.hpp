#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "termset/config.hpp"

namespace termset::cli {

std::string sha256_file(const std::filesystem::path& path);

// Record of one command invocation: what ran, with which settings, on which
// bytes, producing which bytes.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> args);

  void set_config(const KeyValueConfig& config);
  void add_seed(const std::string& name, std::uint64_t value);
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  // Outputs of non-deterministic commands (timings) are hashed but replay
  // does not compare them.
  void set_deterministic(bool deterministic) { deterministic_ = deterministic; }

  void write(const std::filesystem::path& path, double wall_seconds) const;

 private:
  std::string command_;
  std::vector<std::string> args_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json seeds_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
  nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
  bool deterministic_ = true;
};

}  // namespace termset::cli
