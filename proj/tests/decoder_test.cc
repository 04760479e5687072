#include "termset/decoder.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "fixture.hpp"
#include "support.hpp"
#include "termset/error.hpp"
#include "termset/synthetic.hpp"

using namespace termset;
using termset::fixtures::abc_index;
using termset::fixtures::ids;

namespace {

QueryContext empty_query(const Index& index) {
  return make_query_context("q", {}, index.dictionary());
}

Hypothesis complete(const Index& index, const std::vector<std::string>& terms, double logprob) {
  const auto seq = ids(index, terms);
  return {seq, logprob, std::make_shared<const PrefixNode>(index.walk(seq))};
}

std::vector<TermId> sorted(std::vector<TermId> v) {
  std::sort(v.begin(), v.end());
  return v;
}

void expect_bijection(const Index& index, const SearchResult& r) {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < r.ranking.size(); ++i) {
    const RankedDoc& doc = r.ranking[i];
    EXPECT_TRUE(seen.insert(doc.doc_id).second) << doc.doc_id;
    const auto d = index.find_doc(doc.doc_id);
    ASSERT_TRUE(d.has_value());
    EXPECT_EQ(sorted(doc.permutation), index.doc(*d).sorted);
    if (i > 0) EXPECT_LE(doc.score, r.ranking[i - 1].score);
  }
}

}  // namespace

TEST(BeamSearch, BeamOneYieldsOneValidIdentifier) {
  const Index index = abc_index();
  DecoderOptions opts;
  opts.beam = 1;
  const auto done = constrained_beam_search(empty_query(index), index, UniformScorer(), opts);
  ASSERT_EQ(done.size(), 1u);
  ASSERT_EQ(done[0].sequence.size(), 3u);
  const auto doc = index.complete_doc(*done[0].node);
  ASSERT_TRUE(doc.has_value());
  EXPECT_EQ(sorted(done[0].sequence), index.doc(*doc).sorted);
}

TEST(BeamSearch, ExhaustiveMatchesBruteForceUniform) {
  const Index index = abc_index();
  DecoderOptions opts;
  opts.beam = kExhaustiveBeam;
  const UniformScorer u;
  const QueryContext q = empty_query(index);
  const SearchResult r = search(q, index, u, opts);
  ASSERT_EQ(r.ranking.size(), 3u);
  for (const RankedDoc& doc : r.ranking) {
    const auto [perm, best] =
        brute_force_best_permutation(q, *index.find_doc(doc.doc_id), u, index);
    EXPECT_NEAR(doc.score, best, 1e-9) << doc.doc_id;
  }
  // Each document's best order starts with a term unique to it: 1/7 * 1/2.
  for (const RankedDoc& doc : r.ranking) EXPECT_NEAR(doc.score, std::log(1.0 / 14.0), 1e-12);
  EXPECT_EQ(r.ranking[0].doc_id, "D1");
  EXPECT_EQ(r.ranking[2].doc_id, "D3");
}

TEST(BeamSearch, ExhaustiveMatchesBruteForceRandomScorer) {
  std::mt19937_64 rng(12);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Index index = Index::build(random_registry(30, 40, 4, seed));
    const FeatureScorer scorer = fixtures::random_scorer(index, rng);
    const QueryContext q = fixtures::random_query(index, 3, rng);
    DecoderOptions opts;
    opts.beam = kExhaustiveBeam;
    const SearchResult r = search(q, index, scorer, opts);
    ASSERT_EQ(r.ranking.size(), index.doc_count());
    expect_bijection(index, r);
    for (const RankedDoc& doc : r.ranking) {
      const DocIndex d = *index.find_doc(doc.doc_id);
      const auto [perm, best] = brute_force_best_permutation(q, d, scorer, index);
      EXPECT_NEAR(doc.score, best, 1e-9);
      EXPECT_NEAR(sequence_logprob(scorer, q, doc.permutation, index), doc.score, 1e-9);
    }
  }
}

TEST(BeamSearch, SameSetDifferentOrdersAreKept) {
  const Index index = abc_index();
  DecoderOptions opts;
  opts.beam = 2;
  std::vector<std::vector<std::vector<TermId>>> beams;
  opts.on_step = [&](std::size_t, std::span<const Hypothesis> beam) {
    std::vector<std::vector<TermId>> seqs;
    for (const auto& h : beam) seqs.push_back(h.sequence);
    beams.push_back(seqs);
  };
  constrained_beam_search(empty_query(index), index, UniformScorer(), opts);
  ASSERT_EQ(beams.size(), 3u);
  for (const auto& beam : beams) {
    EXPECT_EQ(std::set<std::vector<TermId>>(beam.begin(), beam.end()).size(), beam.size());
    for (const auto& s : beam) EXPECT_EQ(std::set<TermId>(s.begin(), s.end()).size(), s.size());
  }

  beams.clear();
  opts.beam = 100;
  constrained_beam_search(empty_query(index), index, UniformScorer(), opts);
  const auto& depth2 = beams[1];
  const auto ab = ids(index, {"a", "b"}), ba = ids(index, {"b", "a"});
  EXPECT_NE(std::find(depth2.begin(), depth2.end(), ab), depth2.end());
  EXPECT_NE(std::find(depth2.begin(), depth2.end(), ba), depth2.end());

  beams.clear();
  opts.dedup_sets = true;
  constrained_beam_search(empty_query(index), index, UniformScorer(), opts);
  const auto& dedup2 = beams[1];
  const bool has_ab = std::find(dedup2.begin(), dedup2.end(), ab) != dedup2.end();
  const bool has_ba = std::find(dedup2.begin(), dedup2.end(), ba) != dedup2.end();
  EXPECT_NE(has_ab, has_ba);
}

TEST(BeamSearch, LogprobNonIncreasingAlongHypotheses) {
  const Index index = Index::build(random_registry(50, 70, 4, 3));
  std::mt19937_64 rng(1);
  const FeatureScorer scorer = fixtures::random_scorer(index, rng);
  DecoderOptions opts;
  opts.beam = 8;
  std::vector<double> best_by_depth;
  opts.on_step = [&](std::size_t, std::span<const Hypothesis> beam) {
    for (std::size_t i = 1; i < beam.size(); ++i) EXPECT_LE(beam[i].logprob, beam[i - 1].logprob);
    best_by_depth.push_back(beam.front().logprob);
  };
  constrained_beam_search(fixtures::random_query(index, 2, rng), index, scorer, opts);
  for (std::size_t i = 1; i < best_by_depth.size(); ++i) {
    EXPECT_LE(best_by_depth[i], best_by_depth[i - 1]);
  }
}

TEST(BeamSearch, RejectsZeroBeam) {
  const Index index = abc_index();
  DecoderOptions opts;
  opts.beam = 0;
  EXPECT_THROW(constrained_beam_search(empty_query(index), index, UniformScorer(), opts),
               UsageError);
}

TEST(RankDocuments, ExampleOrdering) {
  const Index index = abc_index();
  const auto r = rank_documents(
      "q",
      {complete(index, {"a", "b", "c"}, -16.5), complete(index, {"a", "b", "d"}, -31.0),
       complete(index, {"e", "f", "g"}, -12.8)},
      index, 3);
  ASSERT_EQ(r.ranking.size(), 3u);
  EXPECT_EQ(r.ranking[0].doc_id, "D3");
  EXPECT_EQ(r.ranking[1].doc_id, "D1");
  EXPECT_EQ(r.ranking[2].doc_id, "D2");
  EXPECT_EQ(r.beam, 3u);
}

TEST(RankDocuments, MaxAggregationAndTies) {
  const Index index = abc_index();
  const auto r = rank_documents(
      "q",
      {complete(index, {"b", "a", "d"}, -3.0), complete(index, {"e", "f", "g"}, -2.0),
       complete(index, {"a", "b", "d"}, -2.0), complete(index, {"c", "b", "a"}, -2.0)},
      index, 4);
  ASSERT_EQ(r.ranking.size(), 3u);
  EXPECT_EQ(r.ranking[0].doc_id, "D1");
  EXPECT_EQ(r.ranking[1].doc_id, "D2");
  EXPECT_EQ(r.ranking[1].score, -2.0);
  EXPECT_EQ(r.ranking[1].permutation, ids(index, {"a", "b", "d"}));
  EXPECT_EQ(r.ranking[2].doc_id, "D3");
  EXPECT_TRUE(rank_documents("q", {}, index, 1).ranking.empty());
}

TEST(BruteForce, EdgeCases) {
  IdentifierSpec one;
  one.n = 1;
  one.identifiers = {{"x", {"solo"}}, {"y", {"other"}}};
  const Index single = Index::build(one);
  const auto [perm, lp] =
      brute_force_best_permutation(empty_query(single), 0, UniformScorer(), single);
  EXPECT_EQ(perm, single.doc(0).ordered);
  EXPECT_NEAR(lp, std::log(0.5), 1e-15);

  // Sizes of the feasible sets differ between orders, so D2's orders do not
  // tie; the best starts with the term only D2 has.
  const Index index = abc_index();
  const UniformScorer u;
  const QueryContext q = empty_query(index);
  std::vector<TermId> order = index.doc(1).sorted;
  double enumerated = -1e300;
  do {
    enumerated = std::max(enumerated, sequence_logprob(u, q, order, index));
  } while (std::next_permutation(order.begin(), order.end()));
  const auto [p, best] = brute_force_best_permutation(q, 1, u, index);
  EXPECT_NEAR(best, enumerated, 1e-12);
  EXPECT_EQ(p, ids(index, {"d", "a", "b"}));

  // A lone document: every order sees sizes 3, 2, 1 and all tie.
  IdentifierSpec lone;
  lone.n = 3;
  lone.identifiers = {{"x", {"zeta", "alpha", "mid"}}};
  const Index solo = Index::build(lone);
  const auto [tie, tie_lp] = brute_force_best_permutation(empty_query(solo), 0, u, solo);
  EXPECT_EQ(tie, solo.doc(0).sorted);
  EXPECT_NEAR(tie_lp, sequence_logprob(u, empty_query(solo), solo.doc(0).ordered, solo), 1e-12);

  const Index wide = Index::build(random_registry(3, 40, 9, 1));
  EXPECT_THROW(brute_force_best_permutation(empty_query(wide), 0, UniformScorer(), wide),
               UsageError);
}

TEST(Search, RecallNonDecreasingInBeamUniform) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const Index index = Index::build(random_registry(60, 40, 3, seed));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<DocIndex> doc(0, static_cast<DocIndex>(index.doc_count() - 1));
    std::vector<DocIndex> relevant;
    for (int i = 0; i < 20; ++i) relevant.push_back(doc(rng));
    double prev = -1.0;
    for (std::size_t beam : {1, 2, 5, 10, 50, 200}) {
      DecoderOptions opts;
      opts.beam = beam;
      const SearchResult r = search(empty_query(index), index, UniformScorer(), opts);
      std::set<std::string> got;
      for (const auto& d : r.ranking) got.insert(d.doc_id);
      double hits = 0.0;
      for (DocIndex d : relevant) hits += got.count(index.doc(d).doc_id) ? 1.0 : 0.0;
      EXPECT_GE(hits, prev) << "beam " << beam;
      prev = hits;
    }
  }
}

TEST(Search, DeterministicAcrossThreads) {
  const Index index = Index::build(random_registry(80, 100, 4, 5));
  std::mt19937_64 rng(3);
  const FeatureScorer scorer = fixtures::random_scorer(index, rng);
  std::vector<QueryContext> queries;
  for (int i = 0; i < 25; ++i) {
    queries.push_back(fixtures::random_query(index, 3, rng, "q" + std::to_string(i)));
  }
  DecoderOptions opts;
  opts.beam = 10;
  const auto a = search_all(queries, index, scorer, opts, 1);
  const auto b = search_all(queries, index, scorer, opts, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].query_id, queries[i].query_id);
    ASSERT_EQ(a[i].ranking.size(), b[i].ranking.size());
    for (std::size_t k = 0; k < a[i].ranking.size(); ++k) {
      EXPECT_EQ(a[i].ranking[k].doc_id, b[i].ranking[k].doc_id);
      EXPECT_EQ(a[i].ranking[k].score, b[i].ranking[k].score);
    }
    expect_bijection(index, a[i]);
  }
}
