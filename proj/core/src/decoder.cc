#include "termset/decoder.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>

#include "termset/error.hpp"
#include "termset/parallel.hpp"

namespace termset {
namespace {

struct Extension {
  std::size_t hyp = 0;
  std::size_t pos = 0;  // position in the hypothesis node's feasible set
  TermId term = 0;
  double score = 0.0;
  std::uint32_t tie = 0;
};

}  // namespace

std::vector<Hypothesis> constrained_beam_search(const QueryContext& query, const Index& index,
                                                const Scorer& scorer,
                                                const DecoderOptions& options) {
  if (options.beam == 0) throw UsageError("beam size must be >= 1");
  const std::size_t n = index.identifier_length();

  std::vector<Hypothesis> beam(1);
  beam[0].node = index.root_ptr(options.form);

  std::vector<Extension> ext;
  for (std::size_t depth = 0; depth < n; ++depth) {
    ext.clear();
    for (std::size_t h = 0; h < beam.size(); ++h) {
      const PrefixNode& node = *beam[h].node;
      const auto feasible = node.feasible();
      if (feasible.empty()) continue;
      const std::vector<double> logp = scorer.step_logprob(query, node, feasible);
      if (logp.size() != feasible.size()) {
        throw InvariantError(fmt::format("scorer returned {} scores for {} candidates", logp.size(),
                                         feasible.size()));
      }
      const auto leading = node.child_leading_docs();
      for (std::size_t c = 0; c < feasible.size(); ++c) {
        ext.push_back(
            {h, c, feasible[c], beam[h].logprob + logp[c], index.doc_tie_rank(leading[c])});
      }
    }

    auto better = [&](const Extension& a, const Extension& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.tie != b.tie) return a.tie < b.tie;
      const auto& sa = beam[a.hyp].sequence;
      const auto& sb = beam[b.hyp].sequence;
      if (sa != sb) return sa < sb;
      return a.term < b.term;
    };

    std::size_t keep = std::min(options.beam, ext.size());
    if (options.dedup_sets) {
      std::sort(ext.begin(), ext.end(), better);
      std::set<std::vector<TermId>> seen;
      std::vector<Extension> unique;
      for (const Extension& e : ext) {
        if (unique.size() == options.beam) break;
        std::vector<TermId> key(beam[e.hyp].node->prefix_set().begin(),
                                beam[e.hyp].node->prefix_set().end());
        key.insert(std::upper_bound(key.begin(), key.end(), e.term), e.term);
        if (seen.insert(std::move(key)).second) unique.push_back(e);
      }
      ext = std::move(unique);
      keep = ext.size();
    } else if (keep < ext.size()) {
      std::nth_element(ext.begin(), ext.begin() + static_cast<std::ptrdiff_t>(keep), ext.end(),
                       better);
      ext.resize(keep);
      std::sort(ext.begin(), ext.end(), better);
    } else {
      std::sort(ext.begin(), ext.end(), better);
    }

    std::vector<Hypothesis> next;
    next.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
      const Extension& e = ext[i];
      const Hypothesis& parent = beam[e.hyp];
      Hypothesis child;
      child.sequence = parent.sequence;
      child.sequence.push_back(e.term);
      child.logprob = e.score;
      child.node = std::make_shared<const PrefixNode>(index.extend(*parent.node, e.term));
      next.push_back(std::move(child));
    }
    beam = std::move(next);
    if (options.on_step) options.on_step(depth + 1, beam);
    if (beam.empty()) break;
  }
  return beam;
}

SearchResult rank_documents(std::string query_id, const std::vector<Hypothesis>& completed,
                            const Index& index, std::size_t beam) {
  SearchResult result;
  result.query_id = std::move(query_id);
  result.beam = beam;
  std::unordered_map<DocIndex, std::size_t> slot;
  for (const Hypothesis& h : completed) {
    if (!h.node) throw InvariantError("hypothesis without a prefix node");
    const auto doc = index.complete_doc(*h.node);
    if (!doc) throw InvariantError("rank_documents received an incomplete hypothesis");
    auto [it, inserted] = slot.emplace(*doc, result.ranking.size());
    if (inserted) {
      result.ranking.push_back({index.doc(*doc).doc_id, h.logprob, h.sequence});
      continue;
    }
    RankedDoc& best = result.ranking[it->second];
    if (h.logprob > best.score || (h.logprob == best.score && h.sequence < best.permutation)) {
      best.score = h.logprob;
      best.permutation = h.sequence;
    }
  }
  std::sort(result.ranking.begin(), result.ranking.end(),
            [](const RankedDoc& a, const RankedDoc& b) {
              if (a.score != b.score) return a.score > b.score;
              return a.doc_id < b.doc_id;
            });
  return result;
}

SearchResult search(const QueryContext& query, const Index& index, const Scorer& scorer,
                    const DecoderOptions& options) {
  return rank_documents(query.query_id, constrained_beam_search(query, index, scorer, options),
                        index, options.beam);
}

std::vector<SearchResult> search_all(const std::vector<QueryContext>& queries, const Index& index,
                                     const Scorer& scorer, const DecoderOptions& options,
                                     std::size_t threads) {
  std::vector<SearchResult> results(queries.size());
  DecoderOptions local = options;
  local.on_step = nullptr;
  parallel_for(queries.size(), threads,
               [&](std::size_t i) { results[i] = search(queries[i], index, scorer, local); });
  return results;
}

namespace {

void enumerate_orders(const QueryContext& query, const Scorer& scorer, const Index& index,
                      const PrefixNode& node, std::vector<TermId>& remaining,
                      std::vector<TermId>& current, double logprob,
                      std::pair<std::vector<TermId>, double>& best, bool& found) {
  if (remaining.empty()) {
    if (!found || logprob > best.second) {
      best = {current, logprob};
      found = true;
    }
    return;
  }
  const auto feasible = node.feasible();
  const std::vector<double> logp = scorer.step_logprob(query, node, feasible);
  // `remaining` is kept sorted and each sibling is removed in turn, so the
  // orders are visited lexicographically and the first maximum wins ties.
  for (std::size_t i = 0; i < remaining.size(); ++i) {
    const TermId t = remaining[i];
    const auto pos = node.feasible_position(t);
    if (!pos) throw InvariantError("identifier term missing from its own feasible set");
    const PrefixNode child = index.extend(node, t);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(i));
    current.push_back(t);
    enumerate_orders(query, scorer, index, child, remaining, current, logprob + logp[*pos], best,
                     found);
    current.pop_back();
    remaining.insert(remaining.begin() + static_cast<std::ptrdiff_t>(i), t);
  }
}

}  // namespace

std::pair<std::vector<TermId>, double> brute_force_best_permutation(const QueryContext& query,
                                                                    DocIndex doc,
                                                                    const Scorer& scorer,
                                                                    const Index& index) {
  const std::size_t n = index.identifier_length();
  if (n > kBruteForceMaxLength) {
    throw UsageError(fmt::format("brute force refuses N={} (limit {})", n, kBruteForceMaxLength));
  }
  std::vector<TermId> remaining = index.doc(doc).sorted;
  std::vector<TermId> current;
  std::pair<std::vector<TermId>, double> best;
  bool found = false;
  enumerate_orders(query, scorer, index, index.root(IdentifierForm::kTermSet), remaining, current,
                   0.0, best, found);
  return best;
}

}  // namespace termset
