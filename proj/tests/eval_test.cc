#include "termset/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "fixture.hpp"
#include "termset/error.hpp"
#include "termset/run_format.hpp"
#include "termset/synthetic.hpp"

using namespace termset;

namespace {

using Ranked = std::vector<std::string>;

std::map<std::string, double> read_expected(const std::string& path) {
  std::ifstream in(path);
  std::map<std::string, double> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("metric", 0) == 0) continue;
    const auto tab = line.find('\t');
    const std::string value = line.substr(tab + 1);
    const auto slash = value.find('/');
    out[line.substr(0, tab)] = slash == std::string::npos ? std::stod(value)
                                                          : std::stod(value.substr(0, slash)) /
                                                                std::stod(value.substr(slash + 1));
  }
  return out;
}

std::vector<RunLine> golden_run() {
  std::ifstream in(TERMSET_TEST_DATA "/golden/run.txt");
  return read_run(in);
}

Judgments golden_judgments() {
  std::ifstream in(TERMSET_TEST_DATA "/golden/judgments.tsv");
  return parse_judgments(in);
}

}  // namespace

TEST(Metrics, MrrExamples) {
  const Ranked r{"x", "rel", "y"};
  EXPECT_EQ(mrr_at_k(r, {"rel"}, 10), 0.5);
  EXPECT_EQ(mrr_at_k({"rel"}, {"rel"}, 10), 1.0);
  Ranked eleven(10, "x");
  eleven.push_back("rel");
  EXPECT_EQ(mrr_at_k(eleven, {"rel"}, 10), 0.0);
  EXPECT_THROW(mrr_at_k(r, {}, 10), DataError);
  EXPECT_THROW(mrr_at_k(r, {"rel"}, 0), UsageError);
}

TEST(Metrics, RecallExamples) {
  EXPECT_EQ(recall_at_k({"a", "b", "rel"}, {"rel"}, 10), 1.0);
  EXPECT_EQ(recall_at_k({"r1", "b"}, {"r1", "r2"}, 10), 0.5);
  EXPECT_EQ(recall_at_k({}, {"r1"}, 10), 0.0);
  EXPECT_THROW(recall_at_k({"a"}, {}, 10), DataError);
}

TEST(Metrics, MeanAndMissingQueries) {
  Judgments j;
  j.add("q1", "a", 1);
  j.add("q2", "b", 1);
  Rankings r{{"q1", {"a"}}, {"q2", {"x", "b"}}};
  EXPECT_DOUBLE_EQ(evaluate_rankings(r, j, {10}).mrr_at(10), 0.75);
  j.add("q3", "c", 1);
  const MetricsReport rep = evaluate_rankings(r, j, {10});
  EXPECT_DOUBLE_EQ(rep.mrr_at(10), 0.5);
  EXPECT_EQ(rep.missing_queries, 1u);
  EXPECT_EQ(rep.query_count, 3u);
}

TEST(Metrics, GoldenFixture) {
  const auto expected = read_expected(TERMSET_TEST_DATA "/golden/expected.tsv");
  const MetricsReport rep = evaluate_run(golden_run(), golden_judgments(), {1, 10, 100});
  EXPECT_NEAR(rep.mrr_at(10), expected.at("MRR@10"), 1e-12);
  EXPECT_NEAR(rep.mrr_at(100), expected.at("MRR@100"), 1e-12);
  EXPECT_NEAR(rep.recall_at(1), expected.at("Recall@1"), 1e-12);
  EXPECT_NEAR(rep.recall_at(10), expected.at("Recall@10"), 1e-12);
  EXPECT_NEAR(rep.recall_at(100), expected.at("Recall@100"), 1e-12);
  EXPECT_EQ(rep.query_count, expected.at("queries"));
  EXPECT_EQ(rep.missing_queries, expected.at("missing"));
  EXPECT_EQ(rep.unknown_queries, expected.at("unknown"));
}

TEST(Metrics, RunOrderInvariantAndMonotone) {
  auto run = golden_run();
  const MetricsReport base = evaluate_run(run, golden_judgments(), {1, 5, 10, 100});
  std::mt19937_64 rng(4);
  std::shuffle(run.begin(), run.end(), rng);
  const MetricsReport shuffled = evaluate_run(run, golden_judgments(), {100, 10, 5, 1, 10});
  EXPECT_EQ(shuffled.cutoffs, base.cutoffs);
  EXPECT_EQ(shuffled.mrr, base.mrr);
  EXPECT_EQ(shuffled.recall, base.recall);
  for (std::size_t i = 1; i < base.cutoffs.size(); ++i) {
    EXPECT_LE(base.mrr[i - 1], base.mrr[i]);
    EXPECT_LE(base.recall[i - 1], base.recall[i]);
  }
}

TEST(Metrics, EmptyRunScoresZero) {
  const MetricsReport rep = evaluate_run({}, golden_judgments(), {1, 10, 100});
  for (double v : rep.mrr) EXPECT_EQ(v, 0.0);
  for (double v : rep.recall) EXPECT_EQ(v, 0.0);
  EXPECT_EQ(rep.missing_queries, 5u);
}

TEST(Metrics, ReportFormats) {
  const MetricsReport rep = evaluate_run(golden_run(), golden_judgments(), {1, 10, 100});
  const std::string text = format_report(rep);
  for (const char* row : {"MRR@1", "MRR@10", "MRR@100", "Recall@1", "Recall@10", "Recall@100"}) {
    EXPECT_NE(text.find(row), std::string::npos) << row;
  }
  std::ostringstream jsonl;
  write_report_records(jsonl, rep, "test");
  const std::string records = jsonl.str();
  EXPECT_EQ(std::count(records.begin(), records.end(), '\n'), 6);
}

TEST(RunFormat, RoundTripAndErrors) {
  const Index index = fixtures::abc_index();
  SearchResult r{"q", 10, {{"D3", -0.1234567890123456789, {}}, {"D1", -2.0 / 3.0, {}}}};
  std::stringstream s;
  write_run(s, {r}, "tag");
  const auto lines = read_run(s);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0].doc_id, "D3");
  EXPECT_EQ(lines[0].rank, 1u);
  EXPECT_EQ(lines[0].score, r.ranking[0].score);
  EXPECT_EQ(lines[1].score, r.ranking[1].score);
  EXPECT_EQ(lines[1].tag, "tag");

  std::istringstream dup("q Q0 a 1 1 t\nq Q0 a 2 0.5 t\n");
  EXPECT_THROW(read_run(dup), DataError);
  std::istringstream zero("q Q0 a 0 1 t\n");
  EXPECT_THROW(read_run(zero), DataError);
  std::istringstream short_line("q Q0 a 1\n");
  EXPECT_THROW(read_run(short_line), DataError);
}

namespace {

Corpus numbered_corpus(std::size_t n) {
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    docs.push_back(make_document("d" + std::to_string(i), "", "word" + std::to_string(i)));
  }
  return Corpus::from_documents(docs);
}

}  // namespace

TEST(Split, HalfSplitWithoutLeakage) {
  const Corpus corpus = numbered_corpus(100);
  Judgments train, test;
  for (std::size_t i = 0; i < 100; ++i) {
    train.add("tr" + std::to_string(i), "d" + std::to_string(i), 1);
    test.add("te" + std::to_string(i), "d" + std::to_string(i), 1);
  }
  train.add("tr0", "d1", 1);
  const SplitSpec split = seen_unseen_split(corpus, train, test, 0.5, 3);
  EXPECT_EQ(split.seen.size(), 50u);
  EXPECT_EQ(split.unseen.size(), 50u);
  for (const auto& d : split.seen) EXPECT_EQ(split.unseen.count(d), 0u);
  for (const auto& q : split.training_queries) {
    for (const auto& d : train.relevant(q)) EXPECT_EQ(split.unseen.count(d), 0u);
  }
  EXPECT_EQ(split.test_seen.size() + split.test_unseen.size(), 100u);

  const SplitSpec again = seen_unseen_split(corpus, train, test, 0.5, 3);
  EXPECT_EQ(again.unseen, split.unseen);
  EXPECT_EQ(again.training_queries, split.training_queries);

  std::stringstream s;
  write_split(s, corpus, split);
  const SplitSpec back = read_split(s);
  EXPECT_EQ(back.seen, split.seen);
  EXPECT_EQ(back.unseen, split.unseen);

  EXPECT_THROW(seen_unseen_split(corpus, train, test, 1.0, 3), UsageError);
  EXPECT_THROW(seen_unseen_split(corpus, train, test, 0.0, 3), UsageError);
}

TEST(Split, SideWithoutTestQueriesFails) {
  const Corpus corpus = numbered_corpus(10);
  Judgments train, test;
  for (int i = 0; i < 10; ++i) train.add("tr" + std::to_string(i), "d" + std::to_string(i), 1);
  test.add("te0", "d0", 1);
  EXPECT_THROW(seen_unseen_split(corpus, train, test, 0.5, 1), DataError);
}

TEST(Split, ThreeColumnReport) {
  const Corpus corpus = numbered_corpus(20);
  Judgments train, test;
  Rankings rankings;
  for (int i = 0; i < 20; ++i) {
    const std::string d = "d" + std::to_string(i);
    train.add("tr" + std::to_string(i), d, 1);
    test.add("te" + std::to_string(i), d, 1);
    rankings["te" + std::to_string(i)] = i % 2 ? Ranked{d} : Ranked{"x", d};
  }
  const SplitSpec split = seen_unseen_split(corpus, train, test, 0.4, 5);
  const SplitReport rep = evaluate_split(rankings, test, split, {1, 10});
  EXPECT_EQ(rep.seen.query_count + rep.unseen.query_count, rep.joint.query_count);
  // micro average over both sides
  const double micro = (rep.seen.mrr_at(10) * rep.seen.query_count +
                        rep.unseen.mrr_at(10) * rep.unseen.query_count) /
                       rep.joint.query_count;
  EXPECT_NEAR(rep.joint.mrr_at(10), micro, 1e-12);
  const std::string text = format_split_report(rep);
  const std::string header = text.substr(0, text.find('\n'));
  EXPECT_NE(header.find("Seen"), std::string::npos);
  EXPECT_NE(header.find("Unseen"), std::string::npos);
  EXPECT_NE(header.find("Seen+Unseen"), std::string::npos);
}

TEST(Ablation, SequenceFeasibleSetAndExhaustiveEquivalence) {
  const Index index = Index::build(random_registry(20, 30, 3, 2));
  const PrefixNode& root = index.root(IdentifierForm::kSequence);
  const TermId first = index.doc(0).ordered[0];
  const PrefixNode node = index.extend(root, first);
  std::set<TermId> expected;
  for (const auto& d : index.docs()) {
    if (d.ordered[0] == first) expected.insert(d.ordered[1]);
  }
  EXPECT_EQ(std::set<TermId>(node.feasible().begin(), node.feasible().end()), expected);

  std::vector<QueryContext> queries{make_query_context("q", {}, index.dictionary())};
  Judgments j;
  j.add("q", index.doc(0).doc_id, 1);
  DecoderOptions opts;
  opts.beam = kExhaustiveBeam;
  for (IdentifierForm form : {IdentifierForm::kTermSet, IdentifierForm::kSequence}) {
    opts.form = form;
    const SearchResult r = search(queries[0], index, UniformScorer(), opts);
    EXPECT_EQ(r.ranking.size(), index.doc_count());
  }
  const AblationReport rep = ablate_identifier_scheme(index, UniformScorer(), queries, j, {10}, 5);
  const std::string text = format_ablation(rep);
  EXPECT_NE(text.find("Sequence"), std::string::npos);
  EXPECT_NE(text.find("Term Set"), std::string::npos);
}

TEST(Efficiency, OneRowPerBeam) {
  const Index index = Index::build(random_registry(300, 400, 5, 1));
  std::vector<QueryContext> queries;
  for (int i = 0; i < 5; ++i) {
    queries.push_back(make_query_context("q" + std::to_string(i), {index.dictionary().term(i * 7)},
                                         index.dictionary()));
  }
  const EfficiencyReport rep = efficiency_report(index, UniformScorer(), queries, {1, 10, 100});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_GT(rep.index_bytes, 0u);
  EXPECT_TRUE(format_efficiency(rep).find("bs = 100") != std::string::npos);

  std::vector<std::vector<TermId>> prefixes;
  for (DocIndex d = 0; d < 50; ++d) prefixes.push_back({index.doc(d).sorted[0]});
  const FeasibleTiming t = time_feasible_sets(index, prefixes);
  EXPECT_GE(t.postings_ms, 0.0);
  EXPECT_GE(t.scan_ms, 0.0);
}
