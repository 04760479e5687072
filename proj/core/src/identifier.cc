#include "termset/identifier.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "termset/error.hpp"

namespace termset {
namespace {

constexpr std::string_view kPlaceholderMark = "\xE2\x9F\x82";  // U+27C2

std::vector<std::string> sorted_copy(const std::vector<std::string>& v) {
  std::vector<std::string> s = v;
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace

std::string placeholder_term(std::string_view doc_id, std::size_t k) {
  return fmt::format("{}{}:{}", kPlaceholderMark, doc_id, k);
}

bool is_placeholder(std::string_view term) {
  return term.substr(0, kPlaceholderMark.size()) == kPlaceholderMark;
}

std::vector<std::string> rank_terms(const TermWeights& weights) {
  std::vector<const TermWeight*> order;
  order.reserve(weights.size());
  for (const auto& w : weights) order.push_back(&w);
  std::sort(order.begin(), order.end(), [](const TermWeight* a, const TermWeight* b) {
    if (a->weight != b->weight) return a->weight > b->weight;
    if (a->first_position != b->first_position) return a->first_position < b->first_position;
    return a->term < b->term;
  });
  std::vector<std::string> out;
  out.reserve(order.size());
  for (const TermWeight* w : order) out.push_back(w->term);
  return out;
}

std::vector<std::string> select_identifier(const TermWeights& weights, std::size_t n,
                                           std::string_view doc_id) {
  std::vector<std::string> ranked = rank_terms(weights);
  if (ranked.size() > n) ranked.resize(n);
  for (std::size_t k = 0; ranked.size() < n; ++k) ranked.push_back(placeholder_term(doc_id, k));
  return ranked;
}

std::vector<RankedTerms> rank_corpus(const ImportanceEstimator& estimator, const Corpus& corpus) {
  std::vector<RankedTerms> out;
  out.reserve(corpus.size());
  for (const Document& doc : corpus.documents()) {
    out.push_back({doc.doc_id, rank_terms(estimator.score_document(doc))});
  }
  return out;
}

IdentifierSpec resolve_collisions(const std::vector<RankedTerms>& docs, std::size_t n) {
  if (n == 0) throw UsageError("identifier length must be >= 1");
  IdentifierSpec spec;
  spec.n = n;

  struct State {
    std::vector<std::string> current;
    std::size_t next = 0;  // next unused position in the ranking
    std::size_t placeholder_k = 0;
  };
  std::vector<State> state(docs.size());
  std::vector<std::unordered_set<std::string_view>> vocab(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& ranked = docs[d].ranked;
    State& s = state[d];
    s.next = std::min(n, ranked.size());
    s.current.assign(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(s.next));
    while (s.current.size() < n) {
      s.current.push_back(placeholder_term(docs[d].doc_id, s.placeholder_k++));
      ++spec.padding_placeholders;
    }
    vocab[d].insert(ranked.begin(), ranked.end());
  }

  for (;;) {
    std::map<std::vector<std::string>, std::vector<std::size_t>> groups;
    for (std::size_t d = 0; d < docs.size(); ++d)
      groups[sorted_copy(state[d].current)].push_back(d);

    bool collided = false;
    for (const auto& [set, members] : groups) {
      if (members.size() < 2) continue;
      collided = true;
      for (std::size_t m = 1; m < members.size(); ++m) {
        const std::size_t d = members[m];
        State& s = state[d];
        const auto& ranked = docs[d].ranked;
        auto discriminates = [&](const std::string& term) {
          return std::none_of(members.begin(), members.end(), [&](std::size_t other) {
            return other != d && vocab[other].count(term) > 0;
          });
        };
        while (s.next < ranked.size() && !discriminates(ranked[s.next])) ++s.next;
        if (s.next < ranked.size()) {
          s.current.back() = ranked[s.next++];
        } else {
          s.current.back() = placeholder_term(docs[d].doc_id, s.placeholder_k++);
          ++spec.collision_placeholders;
        }
      }
    }
    if (!collided) break;
  }

  spec.identifiers.reserve(docs.size());
  for (std::size_t d = 0; d < docs.size(); ++d) {
    spec.identifiers.push_back({docs[d].doc_id, std::move(state[d].current)});
  }
  return spec;
}

IdentifierScan choose_identifier_length(const std::vector<RankedTerms>& docs, std::size_t n_min,
                                        std::size_t n_max) {
  if (n_min == 0 || n_max < n_min) throw UsageError("need 1 <= n_min <= n_max");
  IdentifierScan scan;
  for (std::size_t n = n_min; n <= n_max; ++n) {
    IdentifierSpec spec = resolve_collisions(docs, n);
    scan.tried.emplace_back(n, spec.collision_placeholders);
    const bool done = spec.collision_placeholders == 0 || n == n_max;
    scan.spec = std::move(spec);
    if (done) break;
  }
  return scan;
}

void validate_identifiers(const IdentifierSpec& spec) {
  if (spec.n == 0) throw DataError("identifier length must be >= 1");
  std::set<std::vector<std::string>> seen;
  for (const auto& id : spec.identifiers) {
    if (id.terms.size() != spec.n) {
      throw DataError(fmt::format("identifier of {} has {} terms, expected {}", id.doc_id,
                                  id.terms.size(), spec.n));
    }
    auto sorted = sorted_copy(id.terms);
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw DataError("identifier of " + id.doc_id + " repeats a term");
    }
    if (!seen.insert(std::move(sorted)).second) {
      throw DataError("identifier collision at document " + id.doc_id);
    }
  }
}

void write_identifiers(std::ostream& out, const IdentifierSpec& spec) {
  for (const auto& id : spec.identifiers) {
    out << id.doc_id << '\t';
    for (std::size_t i = 0; i < id.terms.size(); ++i) {
      if (i > 0) out << ',';
      out << id.terms[i];
    }
    out << '\n';
  }
}

IdentifierSpec read_identifiers(std::istream& in) {
  IdentifierSpec spec;
  std::unordered_set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto tab = text.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw DataError(fmt::format("line {}: expected doc_id<TAB>terms", line));
    }
    Identifier id;
    id.doc_id = text.substr(0, tab);
    if (!ids.insert(id.doc_id).second) {
      throw DataError(fmt::format("line {}: duplicate doc_id {}", line, id.doc_id));
    }
    std::stringstream ss(text.substr(tab + 1));
    std::string term;
    while (std::getline(ss, term, ',')) {
      if (term.empty()) throw DataError(fmt::format("line {}: empty term", line));
      if (is_placeholder(term)) ++spec.padding_placeholders;
      id.terms.push_back(term);
    }
    if (spec.identifiers.empty()) {
      spec.n = id.terms.size();
    } else if (id.terms.size() != spec.n) {
      throw DataError(fmt::format("line {}: identifier has {} terms, expected {}", line,
                                  id.terms.size(), spec.n));
    }
    spec.identifiers.push_back(std::move(id));
  }
  return spec;
}

}  // namespace termset
