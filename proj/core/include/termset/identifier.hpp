#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "termset/corpus.hpp"
#include "termset/importance.hpp"

namespace termset {

// Synthetic term "⟂{doc_id}:{k}". The tokenizer never emits '⟂', so these
// never clash with real terms and are unique to their document.
std::string placeholder_term(std::string_view doc_id, std::size_t k);
bool is_placeholder(std::string_view term);

// All distinct terms, weight descending; ties go to the earlier first
// occurrence, then to the lexicographically smaller term.
std::vector<std::string> rank_terms(const TermWeights& weights);

// The top-n of rank_terms, padded with placeholders when the document has
// fewer than n distinct terms.
std::vector<std::string> select_identifier(const TermWeights& weights, std::size_t n,
                                           std::string_view doc_id);

struct Identifier {
  std::string doc_id;
  std::vector<std::string> terms;  // importance order
};

struct IdentifierSpec {
  std::size_t n = 0;
  std::vector<Identifier> identifiers;
  std::size_t padding_placeholders = 0;
  std::size_t collision_placeholders = 0;

  std::size_t placeholders() const { return padding_placeholders + collision_placeholders; }
};

struct RankedTerms {
  std::string doc_id;
  std::vector<std::string> ranked;  // output of rank_terms
};

std::vector<RankedTerms> rank_corpus(const ImportanceEstimator& estimator, const Corpus& corpus);

// Takes the top-n of every ranking and repairs duplicate term sets. Within a
// group of documents sharing a set, the first document (input order) keeps its
// identifier; each other member swaps its lowest-ranked identifier term for
// its next-ranked term that occurs in no other member of the group, or for a
// placeholder once such terms run out. Repeats until all sets are distinct.
IdentifierSpec resolve_collisions(const std::vector<RankedTerms>& docs, std::size_t n);

struct IdentifierScan {
  IdentifierSpec spec;
  // (n, collision placeholders) for every n tried.
  std::vector<std::pair<std::size_t, std::size_t>> tried;
};

// Smallest n in [n_min, n_max] whose repair needs no collision placeholder;
// n_max if none qualifies.
IdentifierScan choose_identifier_length(const std::vector<RankedTerms>& docs, std::size_t n_min,
                                        std::size_t n_max);

// Throws DataError unless every identifier has exactly spec.n distinct terms
// and all term sets are pairwise distinct.
void validate_identifiers(const IdentifierSpec& spec);

// "doc_id<TAB>term1,term2,...,termN" lines in importance order.
void write_identifiers(std::ostream& out, const IdentifierSpec& spec);
IdentifierSpec read_identifiers(std::istream& in);

}  // namespace termset
