#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "termset/index.hpp"
#include "termset/scorer.hpp"

namespace termset {

inline constexpr std::size_t kExhaustiveBeam = std::numeric_limits<std::size_t>::max();

struct Hypothesis {
  std::vector<TermId> sequence;
  double logprob = 0.0;
  std::shared_ptr<const PrefixNode> node;
};

struct DecoderOptions {
  std::size_t beam = 100;
  IdentifierForm form = IdentifierForm::kTermSet;
  // Keep only the best order of each prefix set. Only sound for scorers that
  // ignore term order.
  bool dedup_sets = false;
  // Called with the surviving beam after every step.
  std::function<void(std::size_t depth, std::span<const Hypothesis> beam)> on_step;
};

// N steps of top-K search over the feasible extensions of every hypothesis.
// Selection order: cumulative log-probability descending, then the tie rank
// of the extension's leading document, then the term-id sequence.
std::vector<Hypothesis> constrained_beam_search(const QueryContext& query, const Index& index,
                                                const Scorer& scorer,
                                                const DecoderOptions& options);

struct RankedDoc {
  std::string doc_id;
  double score = 0.0;
  std::vector<TermId> permutation;  // best-scoring generated order
};

struct SearchResult {
  std::string query_id;
  std::size_t beam = 0;
  std::vector<RankedDoc> ranking;
};

// Max-aggregates completed hypotheses per document; score descending, ties by
// ascending doc_id.
SearchResult rank_documents(std::string query_id, const std::vector<Hypothesis>& completed,
                            const Index& index, std::size_t beam);

SearchResult search(const QueryContext& query, const Index& index, const Scorer& scorer,
                    const DecoderOptions& options);

// Queries decode independently; results are in input order whatever the
// thread count.
std::vector<SearchResult> search_all(const std::vector<QueryContext>& queries, const Index& index,
                                     const Scorer& scorer, const DecoderOptions& options,
                                     std::size_t threads = 1);

inline constexpr std::size_t kBruteForceMaxLength = 8;

// Exact best order of one document's identifier by enumerating all N!
// permutations; ties keep the lexicographically smallest. Throws UsageError
// for N > kBruteForceMaxLength.
std::pair<std::vector<TermId>, double> brute_force_best_permutation(const QueryContext& query,
                                                                    DocIndex doc,
                                                                    const Scorer& scorer,
                                                                    const Index& index);

}  // namespace termset
