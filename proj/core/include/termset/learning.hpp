#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "termset/corpus.hpp"
#include "termset/decoder.hpp"
#include "termset/index.hpp"
#include "termset/scorer.hpp"

namespace termset {

enum class InitPolicy { kImportance, kRandom, kLikelihood };

std::string_view to_string(InitPolicy policy);
// Throws UsageError for unknown names.
InitPolicy parse_init_policy(std::string_view name);

struct TrainingConfig {
  std::size_t iterations = 2;
  std::size_t samples = 4;
  std::size_t topk_sampling = 4;
  InitPolicy init = InitPolicy::kImportance;
  std::size_t epochs = 100;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
  std::size_t beam_eval = 10;
  // Offer the previous iteration's target to select_objective alongside the
  // samples, so a pair's objective never gets less likely under the frozen
  // model.
  bool keep_previous_target = true;
  std::size_t threads = 1;

  // Throws UsageError when a count is zero or the rate is not positive.
  void validate() const;
};

struct TrainingExample {
  QueryContext query;
  DocIndex doc = 0;
  bool pseudo = false;
};

struct TrainingData {
  std::vector<TrainingExample> train;
  std::vector<QueryContext> validation_queries;
  Judgments validation_judgments;
};

struct IterationStats {
  std::size_t iteration = 0;
  // Mean log-likelihood of this iteration's targets under the model trained
  // on them.
  double mean_objective_loglik = 0.0;
  double validation_recall10 = 0.0;
  double churn = 0.0;
  double train_loss = 0.0;
  std::size_t pairs = 0;
  std::size_t pseudo_pairs = 0;
};

struct TrainingResult {
  FeatureScorer scorer;
  std::vector<IterationStats> stats;
  // Validation Recall@10 of `scorer`. An iteration that scores strictly
  // worse than its predecessor ends training and is rolled back.
  double validation_recall10 = 0.0;
  std::size_t kept_iteration = 0;
  std::vector<std::vector<TermId>> targets;  // of the kept iteration
};

// importance: stored order; random: seeded shuffle; likelihood: greedy
// rollout under `scorer` over the identifier's remaining terms, ties to the
// earlier stored position. Throws UsageError for likelihood without a scorer.
std::vector<TermId> init_permutation(const Index& index, DocIndex doc, InitPolicy policy,
                                     const Scorer* scorer, const QueryContext* query,
                                     std::uint64_t seed);

// `count` permutations of the document's identifier, each step drawn from the
// renormalised top-`topk` of the remaining terms. topk == 1 draws nothing
// from the generator.
std::vector<std::vector<TermId>> sample_permutations(const QueryContext& query, DocIndex doc,
                                                     const Scorer& scorer, const Index& index,
                                                     std::size_t count, std::size_t topk,
                                                     std::uint64_t seed);

// Highest sequence_logprob; ties go to the smaller term-id sequence. Throws
// DataError when the candidates are not permutations of one identifier.
std::vector<TermId> select_objective(const std::vector<std::vector<TermId>>& candidates,
                                     const QueryContext& query, const Scorer& scorer,
                                     const Index& index);

// Mixes (seed, iteration, example) into an independent stream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

// Validation Recall@10 of a scorer with the beam from `config`.
double validation_recall10(const Index& index, const Scorer& scorer, const TrainingData& data,
                           const TrainingConfig& config);

// Throws DataError on an empty training or validation set.
TrainingResult run_training(const Index& index, const FeatureScorer& initial,
                            const TrainingData& data, const TrainingConfig& config);

void write_iteration_stats(std::ostream& out, const std::vector<IterationStats>& stats);

}  // namespace termset
