#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "termset/corpus.hpp"
#include "termset/decoder.hpp"
#include "termset/run_format.hpp"

namespace termset {

// Both throw UsageError for k == 0 and DataError for an empty relevant set.
double mrr_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                std::size_t k);
double recall_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                   std::size_t k);

struct QueryMetrics {
  std::string query_id;
  bool in_run = false;
  std::vector<double> mrr;  // parallel to MetricsReport::cutoffs
  std::vector<double> recall;
};

struct MetricsReport {
  std::vector<std::size_t> cutoffs;  // ascending, unique
  std::vector<double> mrr;
  std::vector<double> recall;
  std::size_t query_count = 0;
  std::size_t missing_queries = 0;  // judged but absent from the run; scored 0
  std::size_t unknown_queries = 0;  // in the run but unjudged; skipped
  std::vector<QueryMetrics> per_query;

  double mrr_at(std::size_t k) const;
  double recall_at(std::size_t k) const;
};

// query_id -> doc_ids in rank order.
using Rankings = std::map<std::string, std::vector<std::string>, std::less<>>;

Rankings rankings_from_run(const std::vector<RunLine>& run);
Rankings rankings_from_results(const std::vector<SearchResult>& results);

// Means over the judged queries (or over `only` when given, which must be
// judged). Run order does not matter.
MetricsReport evaluate_rankings(const Rankings& rankings, const Judgments& judgments,
                                std::vector<std::size_t> cutoffs,
                                const std::set<std::string>* only = nullptr);
MetricsReport evaluate_run(const std::vector<RunLine>& run, const Judgments& judgments,
                           std::vector<std::size_t> cutoffs);

// Aligned text table with one row per metric; header lists the query counts.
std::string format_report(const MetricsReport& report);
// One JSON object per line: a summary record then one record per query.
void write_report_records(std::ostream& out, const MetricsReport& report, std::string_view label);

struct SplitSpec {
  std::set<std::string> seen;
  std::set<std::string> unseen;
  // Training queries kept: every positive is a seen document.
  std::set<std::string> training_queries;
  // Test queries by side. A query whose relevant documents straddle both
  // sides is evaluated only in the joint column.
  std::set<std::string> test_seen;
  std::set<std::string> test_unseen;
  std::set<std::string> test_all;
};

// Seeded partition of the corpus; `unseen_fraction` of the documents (rounded)
// lose their training queries. Throws UsageError unless 0 < fraction < 1 and
// DataError when either side ends up with no judged test query.
SplitSpec seen_unseen_split(const Corpus& corpus, const Judgments& training, const Judgments& test,
                            double unseen_fraction, std::uint64_t seed);

// Fills the three test-query sets of `split` from its document sides.
void assign_test_queries(SplitSpec& split, const Judgments& test);

// "doc_id<TAB>seen|unseen" lines. read_split restores the document sides
// only; training and test query sets are left empty.
void write_split(std::ostream& out, const Corpus& corpus, const SplitSpec& split);
SplitSpec read_split(std::istream& in);

Judgments restrict_judgments(const Judgments& judgments, const std::set<std::string>& query_ids);

struct SplitReport {
  MetricsReport seen;
  MetricsReport unseen;
  MetricsReport joint;
};

SplitReport evaluate_split(const Rankings& rankings, const Judgments& test, const SplitSpec& split,
                           std::vector<std::size_t> cutoffs);
// Rows are metrics, columns Seen / Unseen / Seen+Unseen.
std::string format_split_report(const SplitReport& report);

struct AblationReport {
  MetricsReport sequence;
  MetricsReport term_set;
};

// Decodes the same queries with the same scorer under both identifier forms.
AblationReport ablate_identifier_scheme(const Index& index, const Scorer& scorer,
                                        const std::vector<QueryContext>& queries,
                                        const Judgments& judgments,
                                        std::vector<std::size_t> cutoffs, std::size_t beam,
                                        std::size_t threads = 1);
std::string format_ablation(const AblationReport& report);

struct LatencyRow {
  std::size_t beam = 0;
  std::size_t queries = 0;
  double mean_ms = 0.0;
  double median_ms = 0.0;
};

struct EfficiencyReport {
  std::size_t index_bytes = 0;
  std::size_t peak_rss_bytes = 0;  // 0 when the platform does not expose it
  std::vector<LatencyRow> rows;
};

// Times each query sequentially at every beam size.
EfficiencyReport efficiency_report(const Index& index, const Scorer& scorer,
                                   const std::vector<QueryContext>& queries,
                                   const std::vector<std::size_t>& beams);
std::string format_efficiency(const EfficiencyReport& report);

struct FeasibleTiming {
  double postings_ms = 0.0;
  double scan_ms = 0.0;
  double speedup() const { return postings_ms > 0.0 ? scan_ms / postings_ms : 0.0; }
};

// Total wall time of Index::feasible_terms versus Index::scan_feasible over the
// same prefixes. Throws InvariantError if the two disagree on any prefix.
FeasibleTiming time_feasible_sets(const Index& index,
                                  const std::vector<std::vector<TermId>>& prefixes);

// Peak resident set size of this process in bytes, 0 if unknown.
std::size_t peak_rss_bytes();

}  // namespace termset
