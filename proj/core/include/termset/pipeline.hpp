#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "termset/corpus.hpp"
#include "termset/decoder.hpp"
#include "termset/identifier.hpp"
#include "termset/importance.hpp"
#include "termset/index.hpp"
#include "termset/learning.hpp"
#include "termset/scorer.hpp"

namespace termset {

struct TermBuildOptions {
  std::size_t negatives = 4;
  ImportanceTrainingOptions training;
  std::size_t n_min = 4;
  std::size_t n_max = 12;
};

struct TermBuildResult {
  ImportanceModel model;
  std::vector<double> loss_history;
  IdentifierScan scan;
};

// Train term importance on (query, positive, negatives) pairs, then pick the
// identifier length and the identifiers.
TermBuildResult build_terms(const Corpus& corpus, const std::vector<Query>& queries,
                            const Judgments& judgments, const TermBuildOptions& options);

// Largest importance weight of every term across the corpus.
std::unordered_map<std::string, double> max_importance(const ImportanceModel& model,
                                                       const Corpus& corpus);

std::vector<QueryContext> make_contexts(const std::vector<Query>& queries,
                                        const TermDictionary& dict);

struct TrainingSplit {
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;
};

// Holds out a seeded share of the judged queries (at least one) for
// validation; the rest become one example per (query, relevant document).
// `pseudo` queries, if any, only ever add training examples.
TrainingData make_training_data(const Index& index, const std::vector<Query>& queries,
                                const Judgments& judgments, const TrainingSplit& split,
                                const std::vector<Query>* pseudo_queries = nullptr,
                                const Judgments* pseudo_judgments = nullptr);

// Training examples for every judged query, with the given queries as the
// validation set.
TrainingData make_training_data(const Index& index, const std::vector<Query>& train_queries,
                                const Judgments& train_judgments,
                                const std::vector<Query>& validation_queries,
                                const Judgments& validation_judgments);

}  // namespace termset
