#include "commands.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "termset/corpus.hpp"
#include "termset/error.hpp"
#include "termset/eval.hpp"
#include "termset/identifier.hpp"
#include "termset/importance.hpp"
#include "termset/index.hpp"
#include "termset/learning.hpp"
#include "termset/pipeline.hpp"
#include "termset/run_format.hpp"
#include "termset/scorer.hpp"
#include "termset/synthetic.hpp"

namespace termset::cli {
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path, Manifest& manifest) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  manifest.add_input(path);
  return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes, Manifest& manifest) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << bytes;
  out.close();
  if (!out) throw DataError("write failed for " + path.string());
  manifest.add_output(path);
}

TokenizerOptions tokenizer(const KeyValueConfig& config) {
  TokenizerOptions options;
  options.drop_stopwords = config.get_bool("stopwords", false);
  return options;
}

Corpus load_corpus(const Invocation& inv, Manifest& m) {
  std::istringstream in(read_file(inv.input("corpus"), m));
  return ingest_corpus(in, tokenizer(inv.config));
}

std::vector<Query> load_queries(const Invocation& inv, const std::string& name, Manifest& m) {
  std::istringstream in(read_file(inv.input(name), m));
  return ingest_queries(in, tokenizer(inv.config));
}

Judgments load_judgments(const Invocation& inv, const std::string& name, Manifest& m) {
  std::istringstream in(read_file(inv.input(name), m));
  return parse_judgments(in);
}

Index load_index(const Invocation& inv, Manifest& m) {
  std::istringstream in(read_file(inv.input("index"), m));
  return Index::load(in);
}

FeatureScorer load_scorer(const Invocation& inv, const Index& index, Manifest& m) {
  std::istringstream in(read_file(inv.input("scorer"), m));
  FeatureScorer scorer = FeatureScorer::load(in);
  scorer.check_vocabulary(index);
  return scorer;
}

std::vector<std::size_t> parse_list(std::string_view key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw UsageError("");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError(
          fmt::format("config key '{}': '{}' is not a list of positive integers", key, text));
    }
  }
  if (out.empty()) throw UsageError(fmt::format("config key '{}' is empty", key));
  return out;
}

IdentifierForm parse_form(const std::string& name) {
  if (name == "termset") return IdentifierForm::kTermSet;
  if (name == "sequence") return IdentifierForm::kSequence;
  throw UsageError(fmt::format("unknown identifier form '{}' (termset, sequence)", name));
}

std::string records(const MetricsReport& report, std::string_view label) {
  std::ostringstream out;
  write_report_records(out, report, label);
  return out.str();
}

}  // namespace

const fs::path& Invocation::input(const std::string& name) const {
  auto it = inputs.find(name);
  if (it == inputs.end()) throw UsageError("missing required input --" + name);
  return it->second;
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys{
      "seed", "threads", "stopwords",
      // build-terms
      "negatives", "tau", "importance_epochs", "importance_lr", "n_min", "n_max",
      // split
      "unseen_fraction",
      // train
      "iterations", "samples", "topk_sampling", "init", "epochs", "lr", "beam_eval",
      "validation_fraction", "keep_previous_target",
      // search, ablate, evaluate
      "beam", "form", "dedup_sets", "run_tag", "cutoffs",
      // bench
      "beams", "bench_queries", "bench_docs", "bench_vocab", "bench_n", "bench_prefixes"};
  return keys;
}

void cmd_build_terms(const Invocation& inv, Manifest& m) {
  const auto& cfg = inv.config;
  const Corpus corpus = load_corpus(inv, m);
  const auto queries = load_queries(inv, "queries", m);
  const Judgments judgments = load_judgments(inv, "judgments", m);
  judgments.validate(corpus, &queries);

  TermBuildOptions options;
  options.negatives = cfg.get_size("negatives", options.negatives);
  options.training.temperature = cfg.get_double("tau", options.training.temperature);
  options.training.epochs = cfg.get_size("importance_epochs", options.training.epochs);
  options.training.learning_rate = cfg.get_double("importance_lr", options.training.learning_rate);
  options.training.seed = cfg.get_u64("seed", 0);
  options.n_min = cfg.get_size("n_min", options.n_min);
  options.n_max = cfg.get_size("n_max", options.n_max);
  m.add_seed("seed", options.training.seed);

  const TermBuildResult result = build_terms(corpus, queries, judgments, options);
  const IdentifierSpec& spec = result.scan.spec;

  std::ostringstream model, ids, loss;
  result.model.save(model);
  write_identifiers(ids, spec);
  loss << "epoch\tloss\n";
  for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
    loss << e << '\t' << fmt::format("{}", result.loss_history[e]) << '\n';
  }
  write_file(inv.output / "importance.model", model.str(), m);
  write_file(inv.output / "identifiers.tsv", ids.str(), m);
  write_file(inv.output / "importance_loss.tsv", loss.str(), m);

  fmt::print("importance loss {:.6f} -> {:.6f} over {} epochs\n", result.loss_history.front(),
             result.loss_history.back(), options.training.epochs);
  for (const auto& [n, placeholders] : result.scan.tried) {
    fmt::print("  N={} collision placeholders {}\n", n, placeholders);
  }
  fmt::print("N = {} for {} documents\n", spec.n, spec.identifiers.size());
  if (spec.collision_placeholders > 0) {
    fmt::print(stderr,
               "warning: N_max={} reached with {} placeholder term(s) for documents that share "
               "all their terms\n",
               options.n_max, spec.collision_placeholders);
  }
  if (spec.padding_placeholders > 0) {
    fmt::print(stderr, "warning: {} placeholder term(s) pad documents with fewer than {} terms\n",
               spec.padding_placeholders, spec.n);
  }
}

void cmd_build_index(const Invocation& inv, Manifest& m) {
  std::istringstream in(read_file(inv.input("identifiers"), m));
  const Index index = Index::build(read_identifiers(in));
  std::ostringstream bytes;
  index.save(bytes);
  std::istringstream back(bytes.str());
  std::ostringstream again;
  Index::load(back).save(again);
  if (again.str() != bytes.str())
    throw InvariantError("index does not round-trip byte-identically");
  write_file(inv.output / "index.bin", bytes.str(), m);
  fmt::print("N = {}, documents = {}, vocabulary = {}\n", index.identifier_length(),
             index.doc_count(), index.dictionary().size());
}

void cmd_split(const Invocation& inv, Manifest& m) {
  const auto& cfg = inv.config;
  const Corpus corpus = load_corpus(inv, m);
  const Judgments training = load_judgments(inv, "judgments", m);
  const Judgments test = load_judgments(inv, "test-judgments", m);
  training.validate(corpus);
  test.validate(corpus);
  const std::uint64_t seed = cfg.get_u64("seed", 0);
  m.add_seed("seed", seed);
  const SplitSpec split =
      seen_unseen_split(corpus, training, test, cfg.get_double("unseen_fraction", 0.5), seed);
  const Judgments kept = restrict_judgments(training, split.training_queries);
  for (const auto& [query, docs] : kept.entries()) {
    for (const auto& [doc, rel] : docs) {
      if (split.unseen.count(doc) > 0) {
        throw InvariantError(fmt::format("training query {} still judges unseen {}", query, doc));
      }
    }
  }
  std::ostringstream split_out, judg_out;
  write_split(split_out, corpus, split);
  write_judgments(judg_out, kept);
  write_file(inv.output / "split.tsv", split_out.str(), m);
  write_file(inv.output / "train_judgments.tsv", judg_out.str(), m);
  fmt::print("documents seen {} unseen {}\n", split.seen.size(), split.unseen.size());
  fmt::print("training queries kept {} of {}\n", kept.query_count(), training.query_count());
  fmt::print("test queries seen {} unseen {} all {}\n", split.test_seen.size(),
             split.test_unseen.size(), split.test_all.size());
}

void cmd_train(const Invocation& inv, Manifest& m) {
  const auto& cfg = inv.config;
  const Corpus corpus = load_corpus(inv, m);
  const auto queries = load_queries(inv, "queries", m);
  const Judgments judgments = load_judgments(inv, "judgments", m);
  judgments.validate(corpus, &queries);
  const Index index = load_index(inv, m);
  std::istringstream model_in(read_file(inv.input("importance-model"), m));
  const ImportanceModel importance = ImportanceModel::load(model_in);

  std::vector<Query> pseudo;
  Judgments pseudo_judgments;
  const bool has_pseudo = inv.has_input("pseudo-queries");
  if (has_pseudo) {
    pseudo = load_queries(inv, "pseudo-queries", m);
    pseudo_judgments = load_judgments(inv, "pseudo-judgments", m);
    pseudo_judgments.validate(corpus, &pseudo);
  }

  TrainingConfig config;
  config.iterations = cfg.get_size("iterations", config.iterations);
  config.samples = cfg.get_size("samples", config.samples);
  config.topk_sampling = cfg.get_size("topk_sampling", config.topk_sampling);
  config.init = parse_init_policy(cfg.get_string("init", "importance"));
  config.epochs = cfg.get_size("epochs", config.epochs);
  config.learning_rate = cfg.get_double("lr", config.learning_rate);
  config.seed = cfg.get_u64("seed", 0);
  config.beam_eval = cfg.get_size("beam_eval", config.beam_eval);
  config.keep_previous_target = cfg.get_bool("keep_previous_target", config.keep_previous_target);
  config.threads = cfg.get_size("threads", 1);
  config.validate();
  TrainingSplit split;
  split.validation_fraction = cfg.get_double("validation_fraction", split.validation_fraction);
  split.seed = config.seed;
  m.add_seed("seed", config.seed);

  const TrainingData data =
      make_training_data(index, queries, judgments, split, has_pseudo ? &pseudo : nullptr,
                         has_pseudo ? &pseudo_judgments : nullptr);
  const FeatureScorer initial(index, max_importance(importance, corpus));
  const TrainingResult result = run_training(index, initial, data, config);

  std::ostringstream scorer_out, stats_out;
  result.scorer.save(scorer_out);
  write_iteration_stats(stats_out, result.stats);
  write_file(inv.output / "scorer.model", scorer_out.str(), m);
  write_file(inv.output / "train_stats.jsonl", stats_out.str(), m);

  fmt::print("{} training pairs ({} pseudo), {} validation queries\n", data.train.size(),
             result.stats.front().pseudo_pairs, data.validation_queries.size());
  for (const IterationStats& s : result.stats) {
    fmt::print("iteration {}: objective loglik {:.6f}, validation Recall@10 {:.4f}, churn {:.4f}\n",
               s.iteration, s.mean_objective_loglik, s.validation_recall10, s.churn);
  }
  if (result.stats.size() < config.iterations) {
    fmt::print("stopped early; kept iteration {}\n", result.kept_iteration);
  }
}

void cmd_search(const Invocation& inv, Manifest& m) {
  const auto& cfg = inv.config;
  const Index index = load_index(inv, m);
  const FeatureScorer scorer = load_scorer(inv, index, m);
  const auto queries = load_queries(inv, "queries", m);
  DecoderOptions options;
  options.beam = cfg.get_size("beam", 100);
  options.form = parse_form(cfg.get_string("form", "termset"));
  options.dedup_sets = cfg.get_bool("dedup_sets", false);
  const auto results = search_all(make_contexts(queries, index.dictionary()), index, scorer,
                                  options, cfg.get_size("threads", 1));
  std::ostringstream run;
  write_run(run, results, cfg.get_string("run_tag", "termset"));
  write_file(inv.output / "run.txt", run.str(), m);
  std::size_t lines = 0;
  for (const auto& r : results) lines += r.ranking.size();
  fmt::print("{} queries, {} run lines, beam {}\n", results.size(), lines, options.beam);
}

void cmd_evaluate(const Invocation& inv, Manifest& m) {
  const auto& cfg = inv.config;
  std::istringstream run_in(read_file(inv.input("run"), m));
  const auto run = read_run(run_in);
  const Judgments judgments = load_judgments(inv, "judgments", m);
  const auto cutoffs = parse_list("cutoffs", cfg.get_string("cutoffs", "1,10,100"));
  if (run.empty()) fmt::print(stderr, "warning: run is empty; every query scores 0\n");

  const Rankings rankings = rankings_from_run(run);
  const MetricsReport report = evaluate_rankings(rankings, judgments, cutoffs);
  if (report.unknown_queries > 0) {
    fmt::print(stderr, "warning: skipped {} run queries without judgments\n",
               report.unknown_queries);
  }
  std::string text = format_report(report);
  std::string jsonl = records(report, "all");
  if (inv.has_input("split")) {
    std::istringstream split_in(read_file(inv.input("split"), m));
    SplitSpec split = read_split(split_in);
    assign_test_queries(split, judgments);
    const SplitReport sr = evaluate_split(rankings, judgments, split, cutoffs);
    text += "\n" + format_split_report(sr);
    jsonl +=
        records(sr.seen, "seen") + records(sr.unseen, "unseen") + records(sr.joint, "seen+unseen");
  }
  write_file(inv.output / "report.txt", text, m);
  write_file(inv.output / "report.jsonl", jsonl, m);
  fmt::print("{}", text);
}

void cmd_ablate(const Invocation& inv, Manifest& m) {
  const auto& cfg = inv.config;
  const Index index = load_index(inv, m);
  const FeatureScorer scorer = load_scorer(inv, index, m);
  const auto queries = load_queries(inv, "queries", m);
  const Judgments judgments = load_judgments(inv, "judgments", m);
  const AblationReport report =
      ablate_identifier_scheme(index, scorer, make_contexts(queries, index.dictionary()), judgments,
                               parse_list("cutoffs", cfg.get_string("cutoffs", "1,10,100")),
                               cfg.get_size("beam", 100), cfg.get_size("threads", 1));
  const std::string text = format_ablation(report);
  write_file(inv.output / "ablation.txt", text, m);
  write_file(inv.output / "ablation.jsonl",
             records(report.sequence, "sequence") + records(report.term_set, "term_set"), m);
  fmt::print("{}", text);
}

void cmd_bench(const Invocation& inv, Manifest& m) {
  const auto& cfg = inv.config;
  m.set_deterministic(false);
  const Index index = load_index(inv, m);
  const FeatureScorer scorer = load_scorer(inv, index, m);
  auto queries = make_contexts(load_queries(inv, "queries", m), index.dictionary());
  const std::size_t cap = cfg.get_size("bench_queries", 50);
  if (queries.size() > cap) queries.resize(cap);
  const auto beams = parse_list("beams", cfg.get_string("beams", "10,100"));
  const EfficiencyReport report = efficiency_report(index, scorer, queries, beams);

  const std::uint64_t seed = cfg.get_u64("seed", 0);
  m.add_seed("seed", seed);
  const std::size_t docs = cfg.get_size("bench_docs", 10000);
  const std::size_t n = cfg.get_size("bench_n", 6);
  const Index synthetic =
      Index::build(random_registry(docs, cfg.get_size("bench_vocab", 20000), n, seed));
  std::mt19937_64 rng(seed);
  std::vector<std::vector<TermId>> prefixes(cfg.get_size("bench_prefixes", 1000));
  for (auto& p : prefixes) {
    std::vector<TermId> terms = synthetic.doc(static_cast<DocIndex>(rng() % docs)).ordered;
    std::shuffle(terms.begin(), terms.end(), rng);
    terms.resize(1 + rng() % std::max<std::size_t>(n - 1, 1));
    p = std::move(terms);
  }
  const FeasibleTiming timing = time_feasible_sets(synthetic, prefixes);

  std::string text = format_efficiency(report);
  text += fmt::format(
      "feasible sets on {} synthetic docs, {} prefixes: postings {:.3f} ms, scan {:.3f} ms, "
      "speedup {:.1f}x\n",
      docs, prefixes.size(), timing.postings_ms, timing.scan_ms, timing.speedup());
  std::ostringstream jsonl;
  for (const LatencyRow& row : report.rows) {
    nlohmann::ordered_json rec;
    rec["record"] = "latency";
    rec["beam"] = row.beam;
    rec["queries"] = row.queries;
    rec["mean_s"] = row.mean_ms / 1000.0;
    rec["median_s"] = row.median_ms / 1000.0;
    jsonl << rec.dump() << '\n';
  }
  nlohmann::ordered_json mem{{"record", "memory"},
                             {"index_bytes", report.index_bytes},
                             {"peak_rss_bytes", report.peak_rss_bytes}};
  nlohmann::ordered_json feas{{"record", "feasible"},        {"docs", docs},
                              {"prefixes", prefixes.size()}, {"postings_ms", timing.postings_ms},
                              {"scan_ms", timing.scan_ms},   {"speedup", timing.speedup()}};
  jsonl << mem.dump() << '\n' << feas.dump() << '\n';
  write_file(inv.output / "efficiency.txt", text, m);
  write_file(inv.output / "efficiency.jsonl", jsonl.str(), m);
  fmt::print("{}", text);
}

}  // namespace termset::cli
