#include "termset/eval.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "termset/error.hpp"

namespace termset {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

void check_cutoff(std::size_t k, const std::set<std::string>& relevant) {
  if (k == 0) throw UsageError("metric cutoff must be >= 1");
  if (relevant.empty()) throw DataError("metric needs a non-empty relevant set");
}

std::vector<std::size_t> normalize_cutoffs(std::vector<std::size_t> cutoffs) {
  if (cutoffs.empty()) throw UsageError("at least one cutoff is required");
  std::sort(cutoffs.begin(), cutoffs.end());
  cutoffs.erase(std::unique(cutoffs.begin(), cutoffs.end()), cutoffs.end());
  if (cutoffs.front() == 0) throw UsageError("metric cutoff must be >= 1");
  return cutoffs;
}

std::size_t cutoff_slot(const std::vector<std::size_t>& cutoffs, std::size_t k) {
  auto it = std::find(cutoffs.begin(), cutoffs.end(), k);
  if (it == cutoffs.end()) throw UsageError(fmt::format("cutoff {} was not evaluated", k));
  return static_cast<std::size_t>(it - cutoffs.begin());
}

std::vector<std::string> metric_names(const std::vector<std::size_t>& cutoffs) {
  std::vector<std::string> names;
  for (std::size_t k : cutoffs) names.push_back(fmt::format("MRR@{}", k));
  for (std::size_t k : cutoffs) names.push_back(fmt::format("Recall@{}", k));
  return names;
}

std::vector<double> metric_values(const MetricsReport& r) {
  std::vector<double> v = r.mrr;
  v.insert(v.end(), r.recall.begin(), r.recall.end());
  return v;
}

std::string table(const std::vector<std::string>& header,
                  const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::string out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out += fmt::format("{:<{}}", row[c], width[c]);
      } else {
        out += fmt::format("  {:>{}}", row[c], width[c]);
      }
    }
    out += '\n';
  };
  emit(header);
  for (const auto& row : rows) emit(row);
  return out;
}

}  // namespace

double mrr_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                std::size_t k) {
  check_cutoff(k, relevant);
  const std::size_t depth = std::min(k, ranked.size());
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant.count(ranked[i]) > 0) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double recall_at_k(const std::vector<std::string>& ranked, const std::set<std::string>& relevant,
                   std::size_t k) {
  check_cutoff(k, relevant);
  const std::size_t depth = std::min(k, ranked.size());
  std::set<std::string_view> hit;
  for (std::size_t i = 0; i < depth; ++i) {
    if (relevant.count(ranked[i]) > 0) hit.insert(ranked[i]);
  }
  return static_cast<double>(hit.size()) / static_cast<double>(relevant.size());
}

double MetricsReport::mrr_at(std::size_t k) const { return mrr[cutoff_slot(cutoffs, k)]; }
double MetricsReport::recall_at(std::size_t k) const { return recall[cutoff_slot(cutoffs, k)]; }

Rankings rankings_from_run(const std::vector<RunLine>& run) {
  std::map<std::string, std::vector<const RunLine*>, std::less<>> grouped;
  for (const RunLine& line : run) grouped[line.query_id].push_back(&line);
  Rankings out;
  for (auto& [query, lines] : grouped) {
    std::sort(lines.begin(), lines.end(), [](const RunLine* a, const RunLine* b) {
      if (a->rank != b->rank) return a->rank < b->rank;
      return a->doc_id < b->doc_id;
    });
    auto& ranked = out[query];
    for (const RunLine* l : lines) ranked.push_back(l->doc_id);
  }
  return out;
}

Rankings rankings_from_results(const std::vector<SearchResult>& results) {
  Rankings out;
  for (const SearchResult& r : results) {
    auto& ranked = out[r.query_id];
    ranked.clear();
    for (const RankedDoc& d : r.ranking) ranked.push_back(d.doc_id);
  }
  return out;
}

MetricsReport evaluate_rankings(const Rankings& rankings, const Judgments& judgments,
                                std::vector<std::size_t> cutoffs,
                                const std::set<std::string>* only) {
  MetricsReport report;
  report.cutoffs = normalize_cutoffs(std::move(cutoffs));
  const std::size_t nc = report.cutoffs.size();
  report.mrr.assign(nc, 0.0);
  report.recall.assign(nc, 0.0);

  for (const auto& [query, ranked] : rankings) {
    if (!judgments.contains(query)) ++report.unknown_queries;
  }

  static const std::vector<std::string> kEmpty;
  for (const auto& [query, docs] : judgments.entries()) {
    if (only != nullptr && only->count(query) == 0) continue;
    std::set<std::string> relevant;
    for (const auto& [doc, rel] : docs) relevant.insert(doc);
    auto it = rankings.find(query);
    QueryMetrics m;
    m.query_id = query;
    m.in_run = it != rankings.end();
    if (!m.in_run) ++report.missing_queries;
    const auto& ranked = m.in_run ? it->second : kEmpty;
    for (std::size_t c = 0; c < nc; ++c) {
      m.mrr.push_back(mrr_at_k(ranked, relevant, report.cutoffs[c]));
      m.recall.push_back(recall_at_k(ranked, relevant, report.cutoffs[c]));
      report.mrr[c] += m.mrr.back();
      report.recall[c] += m.recall.back();
    }
    report.per_query.push_back(std::move(m));
  }
  if (only != nullptr) {
    for (const auto& q : *only) {
      if (!judgments.contains(q)) throw DataError("query " + q + " has no judgments");
    }
  }
  report.query_count = report.per_query.size();
  if (report.query_count == 0) throw DataError("no judged queries to evaluate");
  for (std::size_t c = 0; c < nc; ++c) {
    report.mrr[c] /= static_cast<double>(report.query_count);
    report.recall[c] /= static_cast<double>(report.query_count);
  }
  return report;
}

MetricsReport evaluate_run(const std::vector<RunLine>& run, const Judgments& judgments,
                           std::vector<std::size_t> cutoffs) {
  return evaluate_rankings(rankings_from_run(run), judgments, std::move(cutoffs));
}

std::string format_report(const MetricsReport& report) {
  std::string out =
      fmt::format("queries {} (missing from run {}, scored as 0; unjudged in run {}, skipped)\n",
                  report.query_count, report.missing_queries, report.unknown_queries);
  const auto names = metric_names(report.cutoffs);
  const auto values = metric_values(report);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows.push_back({names[i], fmt::format("{:.4f}", values[i])});
  }
  return out + table({"metric", "value"}, rows);
}

void write_report_records(std::ostream& out, const MetricsReport& report, std::string_view label) {
  const auto names = metric_names(report.cutoffs);
  nlohmann::ordered_json summary;
  summary["record"] = "summary";
  summary["label"] = label;
  summary["queries"] = report.query_count;
  summary["missing_queries"] = report.missing_queries;
  summary["unknown_queries"] = report.unknown_queries;
  const auto values = metric_values(report);
  for (std::size_t i = 0; i < names.size(); ++i) summary[names[i]] = values[i];
  out << summary.dump() << '\n';
  for (const QueryMetrics& m : report.per_query) {
    nlohmann::ordered_json rec;
    rec["record"] = "query";
    rec["label"] = label;
    rec["query_id"] = m.query_id;
    rec["in_run"] = m.in_run;
    for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
      rec[fmt::format("MRR@{}", report.cutoffs[c])] = m.mrr[c];
    }
    for (std::size_t c = 0; c < report.cutoffs.size(); ++c) {
      rec[fmt::format("Recall@{}", report.cutoffs[c])] = m.recall[c];
    }
    out << rec.dump() << '\n';
  }
}

SplitSpec seen_unseen_split(const Corpus& corpus, const Judgments& training, const Judgments& test,
                            double unseen_fraction, std::uint64_t seed) {
  if (!(unseen_fraction > 0.0 && unseen_fraction < 1.0)) {
    throw UsageError("split fraction must lie strictly between 0 and 1");
  }
  std::vector<DocIndex> order(corpus.size());
  std::iota(order.begin(), order.end(), DocIndex{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto unseen_count =
      static_cast<std::size_t>(std::llround(unseen_fraction * static_cast<double>(corpus.size())));

  SplitSpec split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& side = i < unseen_count ? split.unseen : split.seen;
    side.insert(corpus.doc(order[i]).doc_id);
  }
  for (const auto& [query, docs] : training.entries()) {
    const bool clean = std::none_of(docs.begin(), docs.end(),
                                    [&](const auto& d) { return split.unseen.count(d.first) > 0; });
    if (clean) split.training_queries.insert(query);
  }
  assign_test_queries(split, test);
  return split;
}

void assign_test_queries(SplitSpec& split, const Judgments& test) {
  split.test_seen.clear();
  split.test_unseen.clear();
  split.test_all.clear();
  for (const auto& [query, docs] : test.entries()) {
    split.test_all.insert(query);
    const bool all_seen = std::all_of(docs.begin(), docs.end(),
                                      [&](const auto& d) { return split.seen.count(d.first) > 0; });
    const bool all_unseen = std::all_of(
        docs.begin(), docs.end(), [&](const auto& d) { return split.unseen.count(d.first) > 0; });
    if (all_seen) split.test_seen.insert(query);
    if (all_unseen) split.test_unseen.insert(query);
  }
  if (split.test_seen.empty())
    throw DataError("split leaves no judged test query on the seen side");
  if (split.test_unseen.empty()) {
    throw DataError("split leaves no judged test query on the unseen side");
  }
}

void write_split(std::ostream& out, const Corpus& corpus, const SplitSpec& split) {
  for (const Document& doc : corpus.documents()) {
    out << doc.doc_id << '\t' << (split.unseen.count(doc.doc_id) > 0 ? "unseen" : "seen") << '\n';
  }
}

SplitSpec read_split(std::istream& in) {
  SplitSpec split;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto tab = text.find('\t');
    const std::string doc = text.substr(0, tab);
    const std::string side = tab == std::string::npos ? "" : text.substr(tab + 1);
    if (doc.empty() || (side != "seen" && side != "unseen")) {
      throw DataError(fmt::format("split line {}: expected doc_id<TAB>seen|unseen", number));
    }
    if (split.seen.count(doc) > 0 || split.unseen.count(doc) > 0) {
      throw DataError(fmt::format("split line {}: duplicate doc_id {}", number, doc));
    }
    (side == "seen" ? split.seen : split.unseen).insert(doc);
  }
  return split;
}

Judgments restrict_judgments(const Judgments& judgments, const std::set<std::string>& query_ids) {
  Judgments out;
  for (const auto& [query, docs] : judgments.entries()) {
    if (query_ids.count(query) == 0) continue;
    for (const auto& [doc, rel] : docs) out.add(query, doc, rel);
  }
  return out;
}

SplitReport evaluate_split(const Rankings& rankings, const Judgments& test, const SplitSpec& split,
                           std::vector<std::size_t> cutoffs) {
  SplitReport r;
  r.seen = evaluate_rankings(rankings, test, cutoffs, &split.test_seen);
  r.unseen = evaluate_rankings(rankings, test, cutoffs, &split.test_unseen);
  r.joint = evaluate_rankings(rankings, test, std::move(cutoffs), &split.test_all);
  return r;
}

std::string format_split_report(const SplitReport& report) {
  const auto names = metric_names(report.joint.cutoffs);
  const auto seen = metric_values(report.seen);
  const auto unseen = metric_values(report.unseen);
  const auto joint = metric_values(report.joint);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows.push_back({names[i], fmt::format("{:.4f}", seen[i]), fmt::format("{:.4f}", unseen[i]),
                    fmt::format("{:.4f}", joint[i])});
  }
  rows.push_back({"queries", std::to_string(report.seen.query_count),
                  std::to_string(report.unseen.query_count),
                  std::to_string(report.joint.query_count)});
  return table({"metric", "Seen", "Unseen", "Seen+Unseen"}, rows);
}

AblationReport ablate_identifier_scheme(const Index& index, const Scorer& scorer,
                                        const std::vector<QueryContext>& queries,
                                        const Judgments& judgments,
                                        std::vector<std::size_t> cutoffs, std::size_t beam,
                                        std::size_t threads) {
  DecoderOptions options;
  options.beam = beam;
  AblationReport report;
  options.form = IdentifierForm::kSequence;
  report.sequence =
      evaluate_rankings(rankings_from_results(search_all(queries, index, scorer, options, threads)),
                        judgments, cutoffs);
  options.form = IdentifierForm::kTermSet;
  report.term_set =
      evaluate_rankings(rankings_from_results(search_all(queries, index, scorer, options, threads)),
                        judgments, std::move(cutoffs));
  return report;
}

std::string format_ablation(const AblationReport& report) {
  const auto names = metric_names(report.term_set.cutoffs);
  const auto seq = metric_values(report.sequence);
  const auto set = metric_values(report.term_set);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < names.size(); ++i) {
    rows.push_back({names[i], fmt::format("{:.4f}", seq[i]), fmt::format("{:.4f}", set[i])});
  }
  return table({"metric", "Sequence", "Term Set"}, rows);
}

std::size_t peak_rss_bytes() {
  std::ifstream status("/proc/self/status");
  std::string line;
  while (std::getline(status, line)) {
    if (line.rfind("VmHWM:", 0) == 0) {
      std::istringstream fields(line.substr(6));
      std::size_t kb = 0;
      if (fields >> kb) return kb * 1024;
    }
  }
  return 0;
}

EfficiencyReport efficiency_report(const Index& index, const Scorer& scorer,
                                   const std::vector<QueryContext>& queries,
                                   const std::vector<std::size_t>& beams) {
  EfficiencyReport report;
  report.index_bytes = index.memory_bytes();
  for (std::size_t beam : beams) {
    DecoderOptions options;
    options.beam = beam;
    std::vector<double> times;
    times.reserve(queries.size());
    for (const QueryContext& q : queries) {
      const auto start = Clock::now();
      const SearchResult r = search(q, index, scorer, options);
      times.push_back(elapsed_ms(start));
      if (r.ranking.empty()) throw InvariantError("search returned no documents");
    }
    LatencyRow row;
    row.beam = beam;
    row.queries = times.size();
    if (!times.empty()) {
      row.mean_ms =
          std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
      std::sort(times.begin(), times.end());
      const std::size_t mid = times.size() / 2;
      row.median_ms = times.size() % 2 == 1 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
    }
    report.rows.push_back(row);
  }
  report.peak_rss_bytes = peak_rss_bytes();
  return report;
}

std::string format_efficiency(const EfficiencyReport& report) {
  std::string out = fmt::format("index memory (MB) {:.3f}\npeak resident (MB) {:.3f}\n",
                                static_cast<double>(report.index_bytes) / (1024.0 * 1024.0),
                                static_cast<double>(report.peak_rss_bytes) / (1024.0 * 1024.0));
  std::vector<std::vector<std::string>> rows;
  for (const LatencyRow& r : report.rows) {
    rows.push_back({fmt::format("bs = {}", r.beam), std::to_string(r.queries),
                    fmt::format("{:.4f}", r.mean_ms / 1000.0),
                    fmt::format("{:.4f}", r.median_ms / 1000.0)});
  }
  return out + table({"beam", "queries", "mean latency (s)", "median latency (s)"}, rows);
}

FeasibleTiming time_feasible_sets(const Index& index,
                                  const std::vector<std::vector<TermId>>& prefixes) {
  FeasibleTiming timing;
  std::vector<std::vector<TermId>> fast, slow;
  fast.reserve(prefixes.size());
  slow.reserve(prefixes.size());

  auto start = Clock::now();
  for (const auto& p : prefixes) fast.push_back(index.feasible_terms(p));
  timing.postings_ms = elapsed_ms(start);

  start = Clock::now();
  for (const auto& p : prefixes) slow.push_back(index.scan_feasible(p));
  timing.scan_ms = elapsed_ms(start);

  for (std::size_t i = 0; i < prefixes.size(); ++i) {
    if (fast[i] != slow[i]) {
      throw InvariantError(fmt::format("feasible sets disagree on prefix #{}", i));
    }
  }
  return timing;
}

}  // namespace termset
