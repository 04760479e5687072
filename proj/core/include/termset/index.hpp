#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "termset/corpus.hpp"
#include "termset/identifier.hpp"

namespace termset {

using TermId = std::uint32_t;

// Bijection between term strings and dense ids. Ids follow lexicographic
// (byte) order of the terms, so comparing ids compares strings.
class TermDictionary {
 public:
  TermDictionary() = default;
  // `terms` must be sorted and unique.
  explicit TermDictionary(std::vector<std::string> terms);

  std::size_t size() const { return terms_.size(); }
  std::optional<TermId> find(std::string_view term) const;
  const std::string& term(TermId id) const { return terms_.at(id); }
  const std::vector<std::string>& terms() const { return terms_; }

  // Ids of all terms whose first four code points equal `prefix4`; terms
  // shorter than four code points are not indexed.
  std::span<const TermId> with_prefix4(std::string_view prefix4) const;

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> ids_;
  std::unordered_map<std::string, std::vector<TermId>> by_prefix4_;
};

// Which identifier structure constrains decoding. kTermSet accepts any
// permutation of a document's term set; kSequence only its stored
// (importance) order, as a trie over sequences would.
enum class IdentifierForm { kTermSet, kSequence };

struct RegisteredDoc {
  std::string doc_id;
  std::vector<TermId> ordered;  // importance order
  std::vector<TermId> sorted;   // strictly increasing
};

// A decoding prefix together with the documents still reachable from it. The
// feasible set and the per-candidate child statistics are computed once, when
// the node is created.
class PrefixNode {
 public:
  IdentifierForm form() const { return form_; }
  std::size_t depth() const { return sequence_.size(); }
  std::size_t identifier_length() const { return n_; }
  bool complete() const { return depth() == n_; }

  std::span<const TermId> sequence() const { return sequence_; }
  std::span<const TermId> prefix_set() const { return prefix_set_; }
  std::span<const DocIndex> postings() const { return postings_; }

  // Sorted ids of every term that may follow this prefix.
  std::span<const TermId> feasible() const { return feasible_; }
  // Parallel to feasible(): size and smallest member of the child's postings.
  std::span<const std::uint32_t> child_counts() const { return child_counts_; }
  std::span<const DocIndex> child_leading_docs() const { return child_leading_; }

  std::optional<std::size_t> feasible_position(TermId term) const;
  // 0 when `term` is not feasible.
  std::uint32_t child_count(TermId term) const;

 private:
  friend class Index;

  IdentifierForm form_ = IdentifierForm::kTermSet;
  std::size_t n_ = 0;
  std::vector<TermId> sequence_;
  std::vector<TermId> prefix_set_;
  std::vector<DocIndex> postings_;
  std::vector<TermId> feasible_;
  std::vector<std::uint32_t> child_counts_;
  std::vector<DocIndex> child_leading_;
};

// Immutable after construction and shared between concurrent queries. Term
// postings are persistent; prefix nodes are created on demand per query.
class Index {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  // Throws DataError on an empty spec, non-uniform lengths or duplicate sets.
  static Index build(const IdentifierSpec& spec);

  std::size_t identifier_length() const { return n_; }
  std::size_t doc_count() const { return docs_.size(); }
  const TermDictionary& dictionary() const { return dict_; }
  const RegisteredDoc& doc(DocIndex d) const { return docs_.at(d); }
  const std::vector<RegisteredDoc>& docs() const { return docs_; }
  std::optional<DocIndex> find_doc(std::string_view doc_id) const;
  std::span<const DocIndex> term_postings(TermId term) const { return postings_.at(term); }
  // Position of the document when doc_ids are ordered shorter-first, then
  // lexicographically. Used for deterministic tie-breaking.
  std::uint32_t doc_tie_rank(DocIndex d) const { return tie_rank_[d]; }

  const PrefixNode& root(IdentifierForm form = IdentifierForm::kTermSet) const;
  std::shared_ptr<const PrefixNode> root_ptr(IdentifierForm form = IdentifierForm::kTermSet) const;

  // Child of `node` after appending `term`. Throws DataError if the term is
  // not feasible.
  PrefixNode extend(const PrefixNode& node, TermId term) const;

  // The node for a whole prefix, walked from the root.
  PrefixNode walk(std::span<const TermId> sequence,
                  IdentifierForm form = IdentifierForm::kTermSet) const;

  // For a complete node, the one document whose identifier it spells.
  // Throws InvariantError if a complete node does not have exactly one posting.
  std::optional<DocIndex> complete_doc(const PrefixNode& node) const;

  // Feasible set of an arbitrary prefix set from the term postings alone:
  // intersect the prefix terms' postings, take the union of the surviving
  // identifiers, drop the prefix. Term-set form only.
  std::vector<TermId> feasible_terms(std::span<const TermId> prefix_set) const;

  // Baseline feasibility by scanning the whole registry, no postings used.
  std::vector<TermId> scan_feasible(std::span<const TermId> prefix_set) const;

  // Approximate heap footprint of the persistent structures.
  std::size_t memory_bytes() const;

  // Little-endian binary: header (magic, version, N, counts), dictionary,
  // per-document ordered term ids, term postings. Identical indexes produce
  // identical bytes.
  void save(std::ostream& out) const;
  static Index load(std::istream& in);

  std::vector<TermId> term_ids(const std::vector<std::string>& terms) const;

 private:
  void finalize();
  void fill_children(PrefixNode& node) const;
  void check_consistency() const;

  std::size_t n_ = 0;
  TermDictionary dict_;
  std::vector<RegisteredDoc> docs_;
  std::unordered_map<std::string, DocIndex> doc_ids_;
  std::vector<std::vector<DocIndex>> postings_;
  std::vector<std::uint32_t> tie_rank_;
  std::shared_ptr<const PrefixNode> set_root_;
  std::shared_ptr<const PrefixNode> sequence_root_;
};

// Sorted intersection; gallops through the longer list when sizes differ a lot.
std::vector<DocIndex> intersect_postings(std::span<const DocIndex> a, std::span<const DocIndex> b);

}  // namespace termset
