#include "termset/learning.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "fixture.hpp"
#include "support.hpp"
#include "termset/error.hpp"
#include "termset/pipeline.hpp"
#include "termset/synthetic.hpp"

using namespace termset;
using termset::fixtures::abc_index;
using termset::fixtures::ids;

namespace {

QueryContext empty_query(const Index& index) {
  return make_query_context("q", {}, index.dictionary());
}

struct Bridging {
  SyntheticDataset ds;
  TermBuildResult terms;
  Index index;
  FeatureScorer initial;
  TrainingData data;
};

Bridging bridging_setup(std::size_t docs) {
  Bridging b;
  BridgingOptions opts;
  opts.docs = docs;
  b.ds = bridging_corpus(opts);
  TermBuildOptions to;
  to.n_min = 3;
  to.n_max = 6;
  b.terms = build_terms(b.ds.corpus, b.ds.train_queries, b.ds.train_judgments, to);
  b.index = Index::build(b.terms.scan.spec);
  b.initial = FeatureScorer(b.index, max_importance(b.terms.model, b.ds.corpus));
  b.data =
      make_training_data(b.index, b.ds.train_queries, b.ds.train_judgments, TrainingSplit{0.2, 1});
  return b;
}

}  // namespace

TEST(InitPermutation, Policies) {
  const Index index = Index::build(random_registry(10, 30, 4, 2));
  EXPECT_EQ(init_permutation(index, 3, InitPolicy::kImportance, nullptr, nullptr, 0),
            index.doc(3).ordered);
  const auto r1 = init_permutation(index, 3, InitPolicy::kRandom, nullptr, nullptr, 42);
  const auto r2 = init_permutation(index, 3, InitPolicy::kRandom, nullptr, nullptr, 42);
  EXPECT_EQ(r1, r2);
  auto s1 = r1, stored = index.doc(3).ordered;
  std::sort(s1.begin(), s1.end());
  std::sort(stored.begin(), stored.end());
  EXPECT_EQ(s1, stored);

  const UniformScorer u;
  const QueryContext q = empty_query(index);
  EXPECT_EQ(init_permutation(index, 3, InitPolicy::kLikelihood, &u, &q, 0), index.doc(3).ordered);
  EXPECT_THROW(init_permutation(index, 3, InitPolicy::kLikelihood, nullptr, &q, 0), UsageError);
}

TEST(InitPermutation, ParsePolicy) {
  EXPECT_EQ(parse_init_policy("likelihood"), InitPolicy::kLikelihood);
  EXPECT_EQ(to_string(InitPolicy::kRandom), "random");
  EXPECT_THROW(parse_init_policy("greedy"), UsageError);
}

TEST(SamplePermutations, TopOneIsGreedyAndSeedFree) {
  const Index index = Index::build(random_registry(20, 30, 4, 2));
  std::mt19937_64 rng(3);
  const FeatureScorer scorer = fixtures::random_scorer(index, rng);
  const QueryContext q = fixtures::random_query(index, 2, rng);
  const auto a = sample_permutations(q, 5, scorer, index, 6, 1, 1);
  const auto b = sample_permutations(q, 5, scorer, index, 6, 1, 999);
  ASSERT_EQ(a.size(), 6u);
  for (const auto& s : a) EXPECT_EQ(s, a[0]);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a[0], init_permutation(index, 5, InitPolicy::kLikelihood, &scorer, &q, 0));
}

TEST(SamplePermutations, SingleTermIdentifier) {
  IdentifierSpec spec;
  spec.n = 1;
  spec.identifiers = {{"x", {"solo"}}, {"y", {"other"}}};
  const Index index = Index::build(spec);
  const auto s = sample_permutations(empty_query(index), 1, UniformScorer(), index, 3, 4, 5);
  ASSERT_EQ(s.size(), 3u);
  for (const auto& p : s) EXPECT_EQ(p, index.doc(1).ordered);
}

TEST(SamplePermutations, UniformFirstStepFrequencies) {
  const Index index = Index::build(random_registry(15, 40, 4, 6));
  const std::size_t samples = 10000;
  const auto perms =
      sample_permutations(empty_query(index), 2, UniformScorer(), index, samples, 4, 17);
  std::map<TermId, std::size_t> first;
  for (const auto& p : perms) ++first[p.front()];
  ASSERT_EQ(first.size(), 4u);
  const double p = 0.25;
  const double mean = samples * p;
  const double sigma = std::sqrt(samples * p * (1.0 - p));
  for (const auto& [term, count] : first) {
    EXPECT_LE(std::abs(static_cast<double>(count) - mean), 3.0 * sigma) << term;
  }
}

TEST(SelectObjective, PicksMostLikely) {
  const Index index = abc_index();
  const UniformScorer u;
  const QueryContext q = empty_query(index);
  const auto abc = ids(index, {"a", "b", "c"});  // ln(1/42)
  const auto cab = ids(index, {"c", "a", "b"});  // ln(1/14)
  EXPECT_EQ(select_objective({abc, cab}, q, u, index), cab);
  EXPECT_EQ(select_objective({abc}, q, u, index), abc);
  // equal likelihood: smaller sequence wins
  const auto cba = ids(index, {"c", "b", "a"});
  EXPECT_EQ(select_objective({cba, cab}, q, u, index), cab);
  EXPECT_THROW(select_objective({abc, ids(index, {"a", "b", "d"})}, q, u, index), DataError);
  EXPECT_THROW(select_objective({}, q, u, index), DataError);
}

TEST(SelectObjective, NeverWorseThanIncludedInit) {
  const Index index = Index::build(random_registry(40, 60, 5, 4));
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const FeatureScorer scorer = fixtures::random_scorer(index, rng);
    const QueryContext q = fixtures::random_query(index, 3, rng);
    const DocIndex d = trial % index.doc_count();
    auto candidates = sample_permutations(q, d, scorer, index, 4, 3, trial);
    const auto init = init_permutation(index, d, InitPolicy::kRandom, nullptr, nullptr, trial);
    candidates.push_back(init);
    const auto chosen = select_objective(candidates, q, scorer, index);
    EXPECT_GE(sequence_logprob(scorer, q, chosen, index), sequence_logprob(scorer, q, init, index));
  }
}

TEST(TrainingConfig, Validation) {
  TrainingConfig c;
  c.validate();
  c.samples = 0;
  EXPECT_THROW(c.validate(), UsageError);
  c = TrainingConfig{};
  c.learning_rate = -1;
  EXPECT_THROW(c.validate(), UsageError);
}

TEST(RunTraining, EmptyDataset) {
  const Index index = abc_index();
  const FeatureScorer scorer(index, {});
  EXPECT_THROW(run_training(index, scorer, TrainingData{}, TrainingConfig{}), DataError);
}

TEST(RunTraining, AdaptiveNotWorseAndObjectiveRises) {
  const Bridging b = bridging_setup(40);
  TrainingConfig one;
  one.iterations = 1;
  one.seed = 3;
  TrainingConfig two = one;
  two.iterations = 2;
  const TrainingResult r1 = run_training(b.index, b.initial, b.data, one);
  const TrainingResult r2 = run_training(b.index, b.initial, b.data, two);
  ASSERT_EQ(r1.stats.size(), 1u);
  ASSERT_GE(r2.stats.size(), 1u);
  ASSERT_LE(r2.stats.size(), 2u);
  EXPECT_EQ(r1.stats[0].churn, 0.0);
  EXPECT_EQ(r1.stats[0].mean_objective_loglik, r2.stats[0].mean_objective_loglik);
  EXPECT_GE(r2.validation_recall10, r1.validation_recall10);
  if (r2.stats.size() == 2) {
    EXPECT_GE(r2.stats[1].mean_objective_loglik, r2.stats[0].mean_objective_loglik);
  }

  // Non-adaptive: iteration-1 targets are the stored identifier order.
  ASSERT_EQ(r1.targets.size(), b.data.train.size());
  for (std::size_t i = 0; i < r1.targets.size(); ++i) {
    EXPECT_EQ(r1.targets[i], b.index.doc(b.data.train[i].doc).ordered);
  }
  for (std::size_t i = 0; i < r2.targets.size(); ++i) {
    auto t = r2.targets[i];
    std::sort(t.begin(), t.end());
    EXPECT_EQ(t, b.index.doc(b.data.train[i].doc).sorted);
  }
}

TEST(RunTraining, Reproducible) {
  const Bridging b = bridging_setup(25);
  TrainingConfig c;
  c.seed = 9;
  c.epochs = 20;
  const TrainingResult a = run_training(b.index, b.initial, b.data, c);
  const TrainingResult again = run_training(b.index, b.initial, b.data, c);
  EXPECT_EQ(a.scorer.weights(), again.scorer.weights());
  ASSERT_EQ(a.stats.size(), again.stats.size());
  for (std::size_t i = 0; i < a.stats.size(); ++i) {
    EXPECT_EQ(a.stats[i].mean_objective_loglik, again.stats[i].mean_objective_loglik);
  }
  c.threads = 3;
  const TrainingResult threaded = run_training(b.index, b.initial, b.data, c);
  EXPECT_EQ(a.scorer.weights(), threaded.scorer.weights());
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_EQ(derive_seed(1, 2, 3), derive_seed(1, 2, 3));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(1, 3, 2));
  EXPECT_NE(derive_seed(1, 2, 3), derive_seed(2, 2, 3));
}
