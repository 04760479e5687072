#include <fmt/format.h>

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <string>
#include <vector>

#include "commands.hpp"
#include "manifest.hpp"
#include "termset/error.hpp"

namespace fs = std::filesystem;
using namespace termset;
using namespace termset::cli;

namespace {

struct PathOption {
  const char* name;
  bool required;
  const char* help;
};

// A flag that overrides one config key.
struct FlagOption {
  const char* name;
  const char* key;
  const char* help;
};

struct CommandDef {
  const char* name;
  const char* help;
  std::vector<PathOption> paths;
  std::vector<FlagOption> flags;
  void (*run)(const Invocation&, Manifest&);
};

const std::vector<CommandDef>& commands() {
  static const std::vector<CommandDef> defs{
      {"build-terms",
       "train term importance and write identifiers",
       {{"corpus", true, "documents (JSONL: doc_id, title, body)"},
        {"queries", true, "training queries (JSONL: query_id, text)"},
        {"judgments", true, "training judgments (TSV: query_id, doc_id, relevance)"}},
       {{"n-min", "n_min", "smallest identifier length tried"},
        {"n-max", "n_max", "largest identifier length tried"},
        {"negatives", "negatives", "negatives per training pair"},
        {"tau", "tau", "InfoNCE temperature"}},
       cmd_build_terms},
      {"build-index",
       "build the identifier index",
       {{"identifiers", true, "identifier file from build-terms"}},
       {},
       cmd_build_index},
      {"split",
       "seen/unseen document split; drops training queries of unseen documents",
       {{"corpus", true, "documents"},
        {"judgments", true, "training judgments"},
        {"test-judgments", true, "test judgments"}},
       {{"fraction", "unseen_fraction", "share of documents made unseen"}},
       cmd_split},
      {"train",
       "likelihood-adapted training of the step scorer",
       {{"corpus", true, "documents"},
        {"queries", true, "training queries"},
        {"judgments", true, "training judgments"},
        {"index", true, "index from build-index"},
        {"importance-model", true, "importance model from build-terms"},
        {"pseudo-queries", false, "extra generated queries (JSONL)"},
        {"pseudo-judgments", false, "judgments for the pseudo queries"}},
       {{"iterations", "iterations", "training iterations T"},
        {"samples", "samples", "sampled permutations per pair"},
        {"topk-sampling", "topk_sampling", "per-step sampling cutoff"},
        {"init", "init", "importance, random or likelihood"},
        {"epochs", "epochs", "gradient steps per iteration"},
        {"lr", "lr", "learning rate"}},
       cmd_train},
      {"search",
       "decode queries into a run file",
       {{"index", true, "index"}, {"scorer", true, "scorer model"}, {"queries", true, "queries"}},
       {{"beam", "beam", "beam size K"},
        {"form", "form", "termset or sequence"},
        {"run-tag", "run_tag", "tag in the last run column"}},
       cmd_search},
      {"evaluate",
       "MRR@K and Recall@K of a run",
       {{"run", true, "run file"},
        {"judgments", true, "test judgments"},
        {"split", false, "split file for the Seen / Unseen / Seen+Unseen report"}},
       {{"cutoffs", "cutoffs", "comma-separated cutoffs"}},
       cmd_evaluate},
      {"ablate",
       "compare sequence and term-set identifiers with one scorer",
       {{"index", true, "index"},
        {"scorer", true, "scorer model"},
        {"queries", true, "test queries"},
        {"judgments", true, "test judgments"}},
       {{"beam", "beam", "beam size K"}, {"cutoffs", "cutoffs", "comma-separated cutoffs"}},
       cmd_ablate},
      {"bench",
       "memory and latency per beam size",
       {{"index", true, "index"}, {"scorer", true, "scorer model"}, {"queries", true, "queries"}},
       {{"beams", "beams", "comma-separated beam sizes"}},
       cmd_bench},
  };
  return defs;
}

int run_cli(const std::vector<std::string>& args);

int replay(const fs::path& manifest_path, const std::string& output_override) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot open manifest " + manifest_path.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed manifest: {}", e.what()));
  }
  if (m.value("tool", "") != "termset" || !m.contains("args") || !m.contains("outputs")) {
    throw DataError("not a termset manifest");
  }
  const std::string command = m.at("command").get<std::string>();
  for (const auto& input : m.at("inputs")) {
    const fs::path path = input.at("path").get<std::string>();
    if (sha256_file(path) != input.at("sha256").get<std::string>()) {
      throw DataError("input changed since the manifest was written: " + path.string());
    }
  }

  const fs::path out =
      fs::absolute(output_override.empty() ? manifest_path.parent_path() / ("replay-" + command)
                                           : fs::path(output_override));
  auto args = m.at("args").get<std::vector<std::string>>();
  bool replaced = false;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--output") {
      args[i + 1] = out.string();
      replaced = true;
    }
  }
  if (!replaced) {
    args.push_back("--output");
    args.push_back(out.string());
  }

  const fs::path here = fs::current_path();
  fs::current_path(m.at("cwd").get<std::string>());
  const int code = run_cli(args);
  fs::current_path(here);
  if (code != 0) return code;

  if (!m.value("deterministic", true)) {
    fmt::print("replayed {}; outputs depend on timing and are not compared\n", command);
    return 0;
  }
  std::size_t different = 0;
  for (const auto& output : m.at("outputs")) {
    const std::string name = output.at("name").get<std::string>();
    const fs::path fresh = out / name;
    const std::string expected = output.at("sha256").get<std::string>();
    const bool same = fs::exists(fresh) && sha256_file(fresh) == expected;
    fmt::print("{} {} {}\n", same ? "identical" : "DIFFERENT", name, expected);
    different += same ? 0 : 1;
  }
  if (different > 0) {
    fmt::print(stderr, "error: {} output(s) differ from the manifest\n", different);
    return 3;
  }
  return 0;
}

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"termset: generative retrieval over term-set document identifiers"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "termset 0.1.0");

  struct Bound {
    const CommandDef* def = nullptr;
    CLI::App* sub = nullptr;
    std::string config;
    std::string output = ".";
    std::map<std::string, std::string> paths;
    std::map<std::string, std::string> flags;
    std::map<std::string, CLI::Option*> flag_opts;
    std::map<std::string, CLI::Option*> path_opts;
  };
  std::vector<Bound> bound(commands().size());
  for (std::size_t i = 0; i < commands().size(); ++i) {
    const CommandDef& def = commands()[i];
    Bound& b = bound[i];
    b.def = &def;
    b.sub = app.add_subcommand(def.name, def.help);
    b.sub->add_option("--config", b.config, "flat key = value settings file");
    b.sub->add_option("--output", b.output, "output directory")->capture_default_str();
    for (const char* common : {"seed", "threads"}) {
      b.flag_opts[common] = b.sub->add_option(fmt::format("--{}", common), b.flags[common],
                                              std::string("overrides config key ") + common);
    }
    for (const PathOption& p : def.paths) {
      auto* opt = b.sub->add_option(fmt::format("--{}", p.name), b.paths[p.name], p.help);
      if (p.required) opt->required();
      b.path_opts[p.name] = opt;
    }
    for (const FlagOption& f : def.flags) {
      b.flag_opts[f.key] = b.sub->add_option(fmt::format("--{}", f.name), b.flags[f.key], f.help);
    }
  }
  std::string manifest_path, replay_output;
  CLI::App* replay_cmd = app.add_subcommand("replay", "re-run a manifest and compare outputs");
  replay_cmd->add_option("manifest", manifest_path, "manifest JSON")->required();
  replay_cmd->add_option("--output", replay_output, "directory for the re-run outputs");

  std::vector<const char*> argv{"termset"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (replay_cmd->parsed()) return replay(manifest_path, replay_output);
    for (Bound& b : bound) {
      if (!b.sub->parsed()) continue;
      const auto start = std::chrono::steady_clock::now();
      Invocation inv;
      inv.command = b.def->name;
      Manifest manifest(inv.command, args);
      if (!b.config.empty()) {
        inv.config = KeyValueConfig::load(b.config);
        manifest.add_input(b.config);
      }
      for (const auto& [key, opt] : b.flag_opts) {
        if (opt->count() > 0) inv.config.set(key, b.flags[key]);
      }
      inv.config.check_known(known_config_keys());
      for (const auto& [name, opt] : b.path_opts) {
        if (opt->count() > 0) inv.inputs[name] = b.paths[name];
      }
      inv.output = b.output;
      fs::create_directories(inv.output);
      manifest.set_config(inv.config);
      b.def->run(inv, manifest);
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      manifest.write(inv.output / fmt::format("manifest-{}.json", inv.command), wall);
      return 0;
    }
    return 1;
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return 1;
  } catch (const DataError& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return 2;
  } catch (const InvariantError& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return 3;
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "data error: {}\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    fmt::print(stderr, "internal error: {}\n", e.what());
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args);
}
