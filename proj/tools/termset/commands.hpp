#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "manifest.hpp"
#include "termset/config.hpp"

namespace termset::cli {

// Everything a command needs after argument parsing: merged settings (config
// file, then flags), the named input paths that were given, and the output
// directory.
struct Invocation {
  std::string command;
  KeyValueConfig config;
  std::map<std::string, std::filesystem::path> inputs;
  std::filesystem::path output;

  bool has_input(const std::string& name) const { return inputs.count(name) > 0; }
  const std::filesystem::path& input(const std::string& name) const;
};

void cmd_build_terms(const Invocation& inv, Manifest& manifest);
void cmd_build_index(const Invocation& inv, Manifest& manifest);
void cmd_split(const Invocation& inv, Manifest& manifest);
void cmd_train(const Invocation& inv, Manifest& manifest);
void cmd_search(const Invocation& inv, Manifest& manifest);
void cmd_evaluate(const Invocation& inv, Manifest& manifest);
void cmd_ablate(const Invocation& inv, Manifest& manifest);
void cmd_bench(const Invocation& inv, Manifest& manifest);

// Every key any command reads.
const std::vector<std::string>& known_config_keys();

}  // namespace termset::cli
