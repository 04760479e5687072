#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "termset/corpus.hpp"
#include "termset/identifier.hpp"

namespace termset {

// `count` distinct lowercase pseudo-words of 5 to 8 letters, none a stopword.
std::vector<std::string> random_words(std::size_t count, std::mt19937_64& rng);

// `docs` distinct random n-term sets over a vocabulary of `vocab` terms; the
// stored order is the draw order.
IdentifierSpec random_registry(std::size_t docs, std::size_t vocab, std::size_t n,
                               std::uint64_t seed);

struct SyntheticDataset {
  Corpus corpus;
  std::vector<Query> train_queries;
  Judgments train_judgments;
  std::vector<Query> test_queries;
  Judgments test_judgments;
  std::set<std::string> bridging_terms;
};

// Every document has one unique "bridge" term in its title and body, common
// filler terms shared across the corpus and a few distractor terms that no
// query mentions.
// Queries hold the bridge plus fillers, so only the bridge tells documents
// apart.
struct BridgingOptions {
  std::size_t docs = 100;
  std::size_t fillers = 30;
  std::size_t distractors = 30;
  std::size_t fillers_per_doc = 6;
  std::size_t distractors_per_doc = 4;
  std::size_t train_queries_per_doc = 3;
  std::size_t test_queries_per_doc = 1;
  std::uint64_t seed = 7;
};
SyntheticDataset bridging_corpus(const BridgingOptions& options);

// Every document consists of exactly `terms_per_doc` distinct terms drawn
// from a small shared vocabulary. Queries are random subsets of a document's
// terms in random order, so a query often lacks whichever term the
// document's identifier happens to list first.
struct OrderNoiseOptions {
  std::size_t docs = 200;
  std::size_t vocab = 300;
  std::size_t terms_per_doc = 5;
  std::size_t query_terms = 3;
  std::size_t train_queries_per_doc = 2;
  std::size_t test_queries_per_doc = 1;
  std::uint64_t seed = 11;
};
SyntheticDataset order_noise_corpus(const OrderNoiseOptions& options);

}  // namespace termset
