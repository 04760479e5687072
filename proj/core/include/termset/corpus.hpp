#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "termset/text.hpp"

namespace termset {

// Position of a document inside a Corpus (or an Index registry).
using DocIndex = std::uint32_t;

struct Document {
  std::string doc_id;
  std::string title;
  std::string body;
  // Title terms first, then body terms.
  std::vector<std::string> terms;
  // Number of leading entries of `terms` that came from the title.
  std::size_t title_terms = 0;
};

struct Query {
  std::string query_id;
  std::string text;
  std::vector<std::string> terms;
};

// Corpus-level statistics frozen at ingestion time. Importance features read
// only these, so a document scores the same in any corpus sharing them.
class CorpusStats {
 public:
  CorpusStats() = default;
  explicit CorpusStats(std::size_t doc_count, std::unordered_map<std::string, std::uint32_t> df)
      : doc_count_(doc_count), df_(std::move(df)) {}

  std::size_t doc_count() const { return doc_count_; }
  std::uint32_t document_frequency(std::string_view term) const;
  const std::unordered_map<std::string, std::uint32_t>& df_table() const { return df_; }

 private:
  std::size_t doc_count_ = 0;
  std::unordered_map<std::string, std::uint32_t> df_;
};

// Immutable after construction; safe to share between reader threads.
class Corpus {
 public:
  Corpus() = default;

  // Throws DataError on a duplicate doc_id or a document without terms.
  static Corpus from_documents(std::vector<Document> docs);

  std::size_t size() const { return docs_.size(); }
  bool empty() const { return docs_.empty(); }
  const std::vector<Document>& documents() const { return docs_; }
  const Document& doc(DocIndex i) const { return docs_.at(i); }
  std::optional<DocIndex> find(std::string_view doc_id) const;
  const CorpusStats& stats() const { return stats_; }

 private:
  std::vector<Document> docs_;
  std::unordered_map<std::string, DocIndex> by_id_;
  CorpusStats stats_;
};

Document make_document(std::string doc_id, std::string title, std::string body,
                       const TokenizerOptions& options = {});
Query make_query(std::string query_id, std::string text, const TokenizerOptions& options = {});

// Line-delimited JSON records {"doc_id", "title", "body"}; title is optional.
// Errors carry the 1-based line number.
Corpus ingest_corpus(std::istream& in, const TokenizerOptions& options = {});
// Line-delimited JSON records {"query_id", "text"}.
std::vector<Query> ingest_queries(std::istream& in, const TokenizerOptions& options = {});

// query_id -> (doc_id -> graded relevance >= 1).
class Judgments {
 public:
  using RelevanceMap = std::map<std::string, std::map<std::string, int, std::less<>>, std::less<>>;

  void add(const std::string& query_id, const std::string& doc_id, int relevance);

  // Every referenced doc_id must exist in the corpus; with `queries` given,
  // every query_id must be present there too.
  void validate(const Corpus& corpus, const std::vector<Query>* queries = nullptr) const;

  const RelevanceMap& entries() const { return rel_; }
  std::set<std::string> relevant(std::string_view query_id) const;
  bool contains(std::string_view query_id) const;
  std::size_t query_count() const { return rel_.size(); }

 private:
  RelevanceMap rel_;
};

// "query_id<TAB>doc_id<TAB>relevance" lines, relevance integer >= 1.
Judgments parse_judgments(std::istream& in);
void write_judgments(std::ostream& out, const Judgments& judgments);

struct TrainingPair {
  std::size_t query = 0;  // index into the query list
  DocIndex positive = 0;
  std::vector<DocIndex> negatives;
};

// One pair per (judged query, relevant doc), in query_id then doc_id order,
// each with `num_negatives` distinct non-relevant documents drawn uniformly.
std::vector<TrainingPair> sample_negatives(const std::vector<Query>& queries,
                                           const Judgments& judgments, const Corpus& corpus,
                                           std::size_t num_negatives, std::uint64_t seed);

// Corpus/queries writers in the same record format the readers accept.
void write_corpus(std::ostream& out, const Corpus& corpus);
void write_queries(std::ostream& out, const std::vector<Query>& queries);

}  // namespace termset
