#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "termset/index.hpp"

namespace termset {

// A query as the scorer sees it: its terms plus the dictionary ids that match
// them exactly or by a shared four-code-point prefix.
struct QueryContext {
  std::string query_id;
  std::vector<std::string> terms;
  std::vector<TermId> in_query;      // sorted
  std::vector<TermId> prefix_match;  // sorted

  bool contains(TermId term) const;
  bool shares_prefix(TermId term) const;
};

QueryContext make_query_context(std::string query_id, const std::vector<std::string>& terms,
                                const TermDictionary& dict);

// Conditional term distribution Pr(next | prefix, query). Implementations
// return one log-probability per candidate; a reference-style scorer
// normalises over the candidate set itself, so the values exponentiate to a
// distribution over `candidates` and each is <= 0.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual std::vector<double> step_logprob(const QueryContext& query, const PrefixNode& node,
                                           std::span<const TermId> candidates) const = 0;
};

class UniformScorer final : public Scorer {
 public:
  std::vector<double> step_logprob(const QueryContext& query, const PrefixNode& node,
                                   std::span<const TermId> candidates) const override;
};

// Sum of step log-probabilities along `sequence`, walking the index from its
// root. Throws DataError if any step is infeasible.
double sequence_logprob(const Scorer& scorer, const QueryContext& query,
                        std::span<const TermId> sequence, const Index& index,
                        IdentifierForm form = IdentifierForm::kTermSet);

inline constexpr std::size_t kStepFeatureCount = 6;
using StepFeatures = std::array<double, kStepFeatureCount>;
inline constexpr std::array<std::string_view, kStepFeatureCount> kStepFeatureNames{
    "in_query", "prefix_match", "max_importance", "log_postings", "position", "bias"};

// Frozen per-step features of one teacher-forced target sequence.
struct PreparedStep {
  std::vector<StepFeatures> candidates;
  std::size_t target = 0;
};
struct PreparedSequence {
  std::vector<PreparedStep> steps;
};

// Log-linear scorer: softmax over the candidate set of weights . features,
// where the features of candidate c after prefix P are
//   [c in query, c shares a 4-char prefix with a query term,
//    corpus-max importance of c, log(1 + |postings(P + c)|), |P| / N, 1].
// Bound to the vocabulary of one index.
class FeatureScorer final : public Scorer {
 public:
  static constexpr int kFormatVersion = 1;
  static constexpr std::string_view kSchema = "step-features-v1";

  FeatureScorer() { weights_.fill(0.0); }
  // `max_importance` maps terms to their largest importance weight across the
  // corpus; missing terms (placeholders among them) get 0.
  FeatureScorer(const Index& index, const std::unordered_map<std::string, double>& max_importance,
                const StepFeatures& weights = {});

  const StepFeatures& weights() const { return weights_; }
  void set_weights(const StepFeatures& weights) { weights_ = weights; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  const std::vector<double>& priors() const { return priors_; }

  // Throws DataError when the index dictionary differs from the scorer's.
  void check_vocabulary(const Index& index) const;

  StepFeatures features(const QueryContext& query, const PrefixNode& node, TermId candidate) const;

  std::vector<double> step_logprob(const QueryContext& query, const PrefixNode& node,
                                   std::span<const TermId> candidates) const override;

  // Teacher forcing: each step's candidates are the feasible set after the
  // target's own prefix.
  PreparedSequence prepare(const QueryContext& query, std::span<const TermId> target,
                           const Index& index,
                           IdentifierForm form = IdentifierForm::kTermSet) const;

  // Mean negative log-likelihood of the prepared targets.
  double loss(std::span<const PreparedSequence> batch) const;
  double loss_and_gradient(std::span<const PreparedSequence> batch, StepFeatures& gradient) const;
  // One gradient-descent step; returns the loss before the update. Throws
  // InvariantError on a non-finite loss.
  double train_step(std::span<const PreparedSequence> batch, double learning_rate);

  void save(std::ostream& out) const;
  static FeatureScorer load(std::istream& in);

 private:
  StepFeatures weights_{};
  std::vector<std::string> vocabulary_;
  std::vector<double> priors_;
};

// Wraps a subword language model: a term is scored as the sum of its tokens'
// log-probabilities followed by the separator token that ends it.
class TokenModel {
 public:
  virtual ~TokenModel() = default;
  virtual std::vector<std::string> split(std::string_view term) const = 0;
  virtual double token_logprob(const QueryContext& query, std::span<const std::string> history,
                               std::string_view token) const = 0;
};

class SubwordScorerAdapter final : public Scorer {
 public:
  // With `renormalize` off the raw term log-probabilities are returned, i.e.
  // normalisation is over the model's full vocabulary instead of the
  // candidate set.
  SubwordScorerAdapter(const TokenModel& model, const TermDictionary& dict,
                       std::string separator = ",", bool renormalize = true)
      : model_(model), dict_(dict), separator_(std::move(separator)), renormalize_(renormalize) {}

  std::vector<double> step_logprob(const QueryContext& query, const PrefixNode& node,
                                   std::span<const TermId> candidates) const override;

 private:
  const TokenModel& model_;
  const TermDictionary& dict_;
  std::string separator_;
  bool renormalize_;
};

// log-softmax in place.
void log_normalize(std::vector<double>& scores);

}  // namespace termset
