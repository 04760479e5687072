#include "termset/index.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include "termset/error.hpp"

namespace termset {
namespace {

constexpr std::array<char, 8> kMagic{'T', 'E', 'R', 'M', 'S', 'E', 'T', 'X'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                         static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(bytes, 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v & 0xFFFFFFFFu));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}

void put_string(std::ostream& out, std::string_view s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw DataError("truncated index file");
  return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
         (static_cast<std::uint32_t>(bytes[2]) << 16) |
         (static_cast<std::uint32_t>(bytes[3]) << 24);
}

std::uint64_t get_u64(std::istream& in) {
  const std::uint64_t lo = get_u32(in);
  const std::uint64_t hi = get_u32(in);
  return lo | (hi << 32);
}

std::string get_string(std::istream& in, std::uint32_t max_len) {
  const std::uint32_t len = get_u32(in);
  if (len > max_len) throw DataError("corrupted index file: string length out of range");
  std::string s(len, '\0');
  if (len > 0 && !in.read(s.data(), len)) throw DataError("truncated index file");
  return s;
}

// Per-thread dense scratch for feasible-set computation.
struct Scratch {
  std::vector<std::uint32_t> count;
  std::vector<DocIndex> leading;
  std::vector<TermId> touched;
};

Scratch& scratch_for(std::size_t vocab) {
  thread_local Scratch scratch;
  if (scratch.count.size() < vocab) {
    scratch.count.resize(vocab, 0);
    scratch.leading.resize(vocab, 0);
  }
  return scratch;
}

std::string describe(const TermDictionary& dict, std::span<const TermId> seq) {
  std::string out = "[";
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i > 0) out += ",";
    out += dict.term(seq[i]);
  }
  return out + "]";
}

}  // namespace

TermDictionary::TermDictionary(std::vector<std::string> terms) : terms_(std::move(terms)) {
  ids_.reserve(terms_.size());
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0 && !(terms_[i - 1] < terms_[i])) {
      throw DataError("term dictionary must be sorted and unique");
    }
    ids_.emplace(terms_[i], static_cast<TermId>(i));
    if (codepoint_count(terms_[i]) >= 4) {
      by_prefix4_[std::string(codepoint_prefix(terms_[i], 4))].push_back(static_cast<TermId>(i));
    }
  }
}

std::optional<TermId> TermDictionary::find(std::string_view term) const {
  auto it = ids_.find(std::string(term));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::span<const TermId> TermDictionary::with_prefix4(std::string_view prefix4) const {
  auto it = by_prefix4_.find(std::string(prefix4));
  if (it == by_prefix4_.end()) return {};
  return it->second;
}

std::optional<std::size_t> PrefixNode::feasible_position(TermId term) const {
  auto it = std::lower_bound(feasible_.begin(), feasible_.end(), term);
  if (it == feasible_.end() || *it != term) return std::nullopt;
  return static_cast<std::size_t>(it - feasible_.begin());
}

std::uint32_t PrefixNode::child_count(TermId term) const {
  auto pos = feasible_position(term);
  return pos ? child_counts_[*pos] : 0;
}

std::vector<DocIndex> intersect_postings(std::span<const DocIndex> a, std::span<const DocIndex> b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::vector<DocIndex> out;
  out.reserve(a.size());
  if (a.empty()) return out;
  if (b.size() / a.size() < 16) {
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
  }
  // Galloping: exponential probe, then binary search inside the bracket.
  auto it = b.begin();
  for (DocIndex x : a) {
    std::size_t step = 1;
    auto lo = it;
    auto hi = it;
    while (hi != b.end() && *hi < x) {
      lo = hi;
      const auto remaining = static_cast<std::size_t>(b.end() - hi);
      hi += static_cast<std::ptrdiff_t>(std::min(step, remaining));
      step *= 2;
    }
    it = std::lower_bound(lo, hi, x);
    if (it == b.end()) break;
    if (*it == x) out.push_back(x);
  }
  return out;
}

Index Index::build(const IdentifierSpec& spec) {
  if (spec.identifiers.empty()) throw DataError("empty registry");
  validate_identifiers(spec);

  std::vector<std::string> vocab;
  for (const auto& id : spec.identifiers)
    vocab.insert(vocab.end(), id.terms.begin(), id.terms.end());
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  if (vocab.size() > std::numeric_limits<TermId>::max()) throw DataError("vocabulary too large");

  Index index;
  index.n_ = spec.n;
  index.dict_ = TermDictionary(std::move(vocab));
  index.docs_.reserve(spec.identifiers.size());
  for (const auto& id : spec.identifiers) {
    RegisteredDoc doc;
    doc.doc_id = id.doc_id;
    for (const auto& t : id.terms) doc.ordered.push_back(*index.dict_.find(t));
    doc.sorted = doc.ordered;
    std::sort(doc.sorted.begin(), doc.sorted.end());
    index.docs_.push_back(std::move(doc));
  }
  index.postings_.assign(index.dict_.size(), {});
  for (DocIndex d = 0; d < index.docs_.size(); ++d) {
    for (TermId t : index.docs_[d].sorted) index.postings_[t].push_back(d);
  }
  index.finalize();
  return index;
}

void Index::finalize() {
  doc_ids_.clear();
  doc_ids_.reserve(docs_.size());
  for (DocIndex d = 0; d < docs_.size(); ++d) {
    if (!doc_ids_.emplace(docs_[d].doc_id, d).second) {
      throw DataError("duplicate doc_id " + docs_[d].doc_id);
    }
  }
  std::vector<DocIndex> order(docs_.size());
  for (DocIndex d = 0; d < docs_.size(); ++d) order[d] = d;
  std::sort(order.begin(), order.end(), [&](DocIndex a, DocIndex b) {
    const auto& x = docs_[a].doc_id;
    const auto& y = docs_[b].doc_id;
    return x.size() != y.size() ? x.size() < y.size() : x < y;
  });
  tie_rank_.assign(docs_.size(), 0);
  for (std::uint32_t r = 0; r < order.size(); ++r) tie_rank_[order[r]] = r;

  std::set<std::vector<TermId>> sets;
  for (const auto& doc : docs_) {
    if (!sets.insert(doc.sorted).second) {
      throw DataError("duplicate identifier set at document " + doc.doc_id);
    }
  }

  for (IdentifierForm form : {IdentifierForm::kTermSet, IdentifierForm::kSequence}) {
    auto root = std::make_shared<PrefixNode>();
    root->form_ = form;
    root->n_ = n_;
    root->postings_.resize(docs_.size());
    for (DocIndex d = 0; d < docs_.size(); ++d) root->postings_[d] = d;
    fill_children(*root);
    (form == IdentifierForm::kTermSet ? set_root_ : sequence_root_) = std::move(root);
  }
}

void Index::fill_children(PrefixNode& node) const {
  Scratch& s = scratch_for(dict_.size());
  s.touched.clear();
  auto visit = [&](TermId t, DocIndex d) {
    if (s.count[t]++ == 0) {
      s.leading[t] = d;
      s.touched.push_back(t);
    }
  };
  if (node.form_ == IdentifierForm::kTermSet) {
    for (DocIndex d : node.postings_) {
      for (TermId t : docs_[d].sorted) {
        if (!std::binary_search(node.prefix_set_.begin(), node.prefix_set_.end(), t)) visit(t, d);
      }
    }
  } else if (node.depth() < n_) {
    for (DocIndex d : node.postings_) visit(docs_[d].ordered[node.depth()], d);
  }
  std::sort(s.touched.begin(), s.touched.end());
  node.feasible_ = s.touched;
  node.child_counts_.resize(s.touched.size());
  node.child_leading_.resize(s.touched.size());
  for (std::size_t i = 0; i < s.touched.size(); ++i) {
    const TermId t = s.touched[i];
    node.child_counts_[i] = s.count[t];
    node.child_leading_[i] = s.leading[t];
    s.count[t] = 0;
  }
}

const PrefixNode& Index::root(IdentifierForm form) const { return *root_ptr(form); }

std::shared_ptr<const PrefixNode> Index::root_ptr(IdentifierForm form) const {
  return form == IdentifierForm::kTermSet ? set_root_ : sequence_root_;
}

PrefixNode Index::extend(const PrefixNode& node, TermId term) const {
  const auto pos = node.feasible_position(term);
  if (!pos) {
    throw DataError(fmt::format("term '{}' is not feasible after prefix {}",
                                term < dict_.size() ? dict_.term(term) : std::to_string(term),
                                describe(dict_, node.sequence())));
  }
  PrefixNode child;
  child.form_ = node.form_;
  child.n_ = n_;
  child.sequence_.reserve(node.sequence_.size() + 1);
  child.sequence_ = node.sequence_;
  child.sequence_.push_back(term);
  child.prefix_set_ = node.prefix_set_;
  child.prefix_set_.insert(
      std::upper_bound(child.prefix_set_.begin(), child.prefix_set_.end(), term), term);
  if (node.form_ == IdentifierForm::kTermSet) {
    if (node.depth() == 0) {
      child.postings_ = postings_[term];
    } else {
      child.postings_ = intersect_postings(node.postings_, postings_[term]);
    }
  } else {
    const std::size_t depth = node.depth();
    for (DocIndex d : node.postings_) {
      if (docs_[d].ordered[depth] == term) child.postings_.push_back(d);
    }
  }
  if (child.postings_.size() != node.child_counts_[*pos]) {
    throw InvariantError("child postings disagree with the parent's feasible statistics");
  }
  fill_children(child);
  return child;
}

PrefixNode Index::walk(std::span<const TermId> sequence, IdentifierForm form) const {
  PrefixNode node = root(form);
  for (TermId t : sequence) node = extend(node, t);
  return node;
}

std::optional<DocIndex> Index::complete_doc(const PrefixNode& node) const {
  if (!node.complete()) return std::nullopt;
  if (node.postings_.size() != 1) {
    throw InvariantError(fmt::format("complete prefix {} matches {} documents",
                                     describe(dict_, node.sequence()), node.postings_.size()));
  }
  return node.postings_.front();
}

std::vector<TermId> Index::feasible_terms(std::span<const TermId> prefix_set) const {
  if (prefix_set.empty()) {
    const auto f = set_root_->feasible();
    return {f.begin(), f.end()};
  }
  std::vector<TermId> prefix(prefix_set.begin(), prefix_set.end());
  for (TermId t : prefix) {
    if (t >= postings_.size()) throw DataError(fmt::format("term id {} out of range", t));
  }
  std::sort(prefix.begin(), prefix.end(), [&](TermId a, TermId b) {
    return postings_[a].size() != postings_[b].size() ? postings_[a].size() < postings_[b].size()
                                                      : a < b;
  });
  std::vector<DocIndex> docs = postings_[prefix[0]];
  for (std::size_t i = 1; i < prefix.size() && !docs.empty(); ++i) {
    docs = intersect_postings(docs, postings_[prefix[i]]);
  }
  std::sort(prefix.begin(), prefix.end());
  std::vector<TermId> out;
  for (DocIndex d : docs) {
    for (TermId t : docs_[d].sorted) {
      if (!std::binary_search(prefix.begin(), prefix.end(), t)) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<TermId> Index::scan_feasible(std::span<const TermId> prefix_set) const {
  std::vector<TermId> prefix(prefix_set.begin(), prefix_set.end());
  std::sort(prefix.begin(), prefix.end());
  std::vector<TermId> out;
  for (const auto& doc : docs_) {
    if (!std::includes(doc.sorted.begin(), doc.sorted.end(), prefix.begin(), prefix.end()))
      continue;
    for (TermId t : doc.sorted) {
      if (!std::binary_search(prefix.begin(), prefix.end(), t)) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<DocIndex> Index::find_doc(std::string_view doc_id) const {
  auto it = doc_ids_.find(std::string(doc_id));
  if (it == doc_ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<TermId> Index::term_ids(const std::vector<std::string>& terms) const {
  std::vector<TermId> out;
  out.reserve(terms.size());
  for (const auto& t : terms) {
    auto id = dict_.find(t);
    if (!id) throw DataError("term '" + t + "' is not in the index vocabulary");
    out.push_back(*id);
  }
  return out;
}

std::size_t Index::memory_bytes() const {
  std::size_t bytes = sizeof(*this);
  for (const auto& t : dict_.terms()) bytes += sizeof(std::string) + t.capacity();
  // Hash tables: roughly a node plus a bucket per entry.
  bytes += dict_.size() * (sizeof(std::string) + sizeof(TermId) + 2 * sizeof(void*));
  for (const auto& d : docs_) {
    bytes += sizeof(RegisteredDoc) + d.doc_id.capacity() +
             (d.ordered.capacity() + d.sorted.capacity()) * sizeof(TermId);
  }
  bytes += doc_ids_.size() * (sizeof(std::string) + sizeof(DocIndex) + 2 * sizeof(void*));
  for (const auto& p : postings_) bytes += sizeof(p) + p.capacity() * sizeof(DocIndex);
  for (const auto* root : {set_root_.get(), sequence_root_.get()}) {
    if (root == nullptr) continue;
    bytes +=
        sizeof(PrefixNode) + root->postings_.capacity() * sizeof(DocIndex) +
        root->feasible_.capacity() * (sizeof(TermId) + sizeof(std::uint32_t) + sizeof(DocIndex));
  }
  return bytes;
}

void Index::save(std::ostream& out) const {
  std::uint64_t total = 0;
  for (const auto& p : postings_) total += p.size();
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, kFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(n_));
  put_u32(out, static_cast<std::uint32_t>(docs_.size()));
  put_u32(out, static_cast<std::uint32_t>(dict_.size()));
  put_u64(out, total);
  for (const auto& t : dict_.terms()) put_string(out, t);
  for (const auto& d : docs_) {
    put_string(out, d.doc_id);
    for (TermId t : d.ordered) put_u32(out, t);
  }
  for (const auto& p : postings_) {
    put_u32(out, static_cast<std::uint32_t>(p.size()));
    for (DocIndex d : p) put_u32(out, d);
  }
}

Index Index::load(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw DataError("not a termset index file (bad magic)");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kFormatVersion) {
    throw DataError(
        fmt::format("unsupported index format version {} (expected {})", version, kFormatVersion));
  }
  Index index;
  index.n_ = get_u32(in);
  const std::uint32_t doc_count = get_u32(in);
  const std::uint32_t vocab = get_u32(in);
  const std::uint64_t total = get_u64(in);
  if (index.n_ == 0 || doc_count == 0 || vocab == 0 ||
      total != static_cast<std::uint64_t>(doc_count) * index.n_) {
    throw DataError("corrupted index header");
  }
  constexpr std::uint32_t kMaxString = 1u << 20;
  std::vector<std::string> terms;
  terms.reserve(vocab);
  for (std::uint32_t i = 0; i < vocab; ++i) terms.push_back(get_string(in, kMaxString));
  index.dict_ = TermDictionary(std::move(terms));

  index.docs_.resize(doc_count);
  for (auto& d : index.docs_) {
    d.doc_id = get_string(in, kMaxString);
    d.ordered.resize(index.n_);
    for (auto& t : d.ordered) {
      t = get_u32(in);
      if (t >= vocab) throw DataError("corrupted index: term id out of range");
    }
    d.sorted = d.ordered;
    std::sort(d.sorted.begin(), d.sorted.end());
    if (std::adjacent_find(d.sorted.begin(), d.sorted.end()) != d.sorted.end()) {
      throw DataError("corrupted index: identifier repeats a term");
    }
  }
  index.postings_.resize(vocab);
  for (auto& p : index.postings_) {
    const std::uint32_t count = get_u32(in);
    if (count > doc_count) throw DataError("corrupted index: posting list too long");
    p.resize(count);
    for (auto& d : p) d = get_u32(in);
  }
  index.check_consistency();
  index.finalize();
  return index;
}

void Index::check_consistency() const {
  std::vector<std::vector<DocIndex>> expected(dict_.size());
  for (DocIndex d = 0; d < docs_.size(); ++d) {
    for (TermId t : docs_[d].sorted) expected[t].push_back(d);
  }
  if (expected != postings_) throw DataError("corrupted index: postings disagree with registry");
}

}  // namespace termset
