#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "termset/corpus.hpp"

namespace termset {

inline constexpr std::size_t kTermFeatureCount = 6;
using TermFeatures = std::array<double, kTermFeatureCount>;

// Feature order of TermFeatures.
inline constexpr std::array<std::string_view, kTermFeatureCount> kTermFeatureNames{
    "tf", "idf", "in_title", "first_position", "length", "bias"};

// One distinct term of a term list along with where it first appears.
struct TermOccurrence {
  std::string term;
  std::size_t first_position = 0;
  std::size_t count = 0;
  bool in_title = false;
};

// Distinct terms in first-occurrence order. The first `title_terms` entries of
// `terms` are the title.
std::vector<TermOccurrence> distinct_terms(const std::vector<std::string>& terms,
                                           std::size_t title_terms);

// tf = count / length, idf = log(|C| / df), in_title, first position / length,
// code points / 10, and a constant 1. A df of zero is treated as one.
TermFeatures featurize(const TermOccurrence& occurrence, std::size_t length,
                       const CorpusStats& stats);
// Throws DataError when `term` does not occur in `doc`.
TermFeatures featurize_term(std::string_view term, const Document& doc, const CorpusStats& stats);

struct TermWeight {
  std::string term;
  double weight = 0.0;
  std::size_t first_position = 0;
};
// Distinct terms in first-occurrence order, each with a weight >= 0.
using TermWeights = std::vector<TermWeight>;

// Linear model over TermFeatures followed by a ReLU clamp. Query and document
// terms share the same parameters.
class ImportanceModel {
 public:
  static constexpr int kFormatVersion = 1;

  ImportanceModel() { weights_.fill(0.0); }
  ImportanceModel(const TermFeatures& weights, double temperature);

  const TermFeatures& weights() const { return weights_; }
  double temperature() const { return temperature_; }

  double pre_activation(const TermFeatures& features) const;
  double weight(const TermFeatures& features) const;

  void save(std::ostream& out) const;
  static ImportanceModel load(std::istream& in);

 private:
  TermFeatures weights_{};
  double temperature_ = 1.0;
};

TermWeights score_terms(const ImportanceModel& model, const Document& doc,
                        const CorpusStats& stats);
TermWeights score_query_terms(const ImportanceModel& model, const Query& query,
                              const CorpusStats& stats);

// Source of per-document term weights used for identifier selection.
class ImportanceEstimator {
 public:
  virtual ~ImportanceEstimator() = default;
  virtual TermWeights score_document(const Document& doc) const = 0;
};

class FeatureImportance final : public ImportanceEstimator {
 public:
  FeatureImportance(ImportanceModel model, CorpusStats stats)
      : model_(std::move(model)), stats_(std::move(stats)) {}
  TermWeights score_document(const Document& doc) const override {
    return score_terms(model_, doc, stats_);
  }

 private:
  ImportanceModel model_;
  CorpusStats stats_;
};

// Adapter for weights computed elsewhere (for instance by a contextual
// encoder). Reads "doc_id<TAB>term<TAB>weight" lines; terms without an entry
// get weight 0 and negative weights are clamped to 0.
class ImportedTermWeights final : public ImportanceEstimator {
 public:
  static ImportedTermWeights load(std::istream& in);
  TermWeights score_document(const Document& doc) const override;

 private:
  std::unordered_map<std::string, std::unordered_map<std::string, double>> table_;
};

// Contrastive objective over (query, positive, negatives): the match score
// of a (query, document) pair sums w_q(t) * w_d(t) over shared distinct
// terms, and each pair contributes -log softmax(score / tau)[positive].
// Features are frozen at construction, so evaluation depends only on the
// model weights.
class InfoNceObjective {
 public:
  InfoNceObjective(const std::vector<TrainingPair>& pairs, const std::vector<Query>& queries,
                   const Corpus& corpus, double temperature);

  std::size_t pair_count() const { return pairs_.size(); }
  double temperature() const { return temperature_; }

  // Mean loss over pairs.
  double loss(const TermFeatures& weights) const;
  double loss_and_gradient(const TermFeatures& weights, TermFeatures& gradient) const;
  std::vector<double> pair_losses(const TermFeatures& weights) const;

 private:
  struct Match {
    TermFeatures query;
    TermFeatures doc;
  };
  using Candidate = std::vector<Match>;
  struct Pair {
    std::vector<Candidate> candidates;  // [0] is the positive
  };

  double pair_loss(const Pair& pair, const TermFeatures& weights, TermFeatures* gradient) const;

  std::vector<Pair> pairs_;
  double temperature_;
};

struct ImportanceTrainingOptions {
  double temperature = 1.0;
  std::size_t epochs = 200;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

struct ImportanceTrainingResult {
  ImportanceModel model;
  // Mean loss before each epoch's update, then the final loss.
  std::vector<double> loss_history;
};

// Full-batch gradient descent from a seeded positive initialisation. Throws
// InvariantError if the loss becomes non-finite.
ImportanceTrainingResult train_importance(const std::vector<TrainingPair>& pairs,
                                          const std::vector<Query>& queries, const Corpus& corpus,
                                          const ImportanceTrainingOptions& options);

}  // namespace termset
