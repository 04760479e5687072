#include "termset/corpus.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <istream>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "termset/error.hpp"

namespace termset {
namespace {

using json = nlohmann::json;

// Ids appear in whitespace-separated run files and comma-separated
// identifier exports, so neither whitespace nor commas are allowed.
void check_id(std::string_view id, std::string_view what, std::size_t line) {
  if (id.empty()) {
    throw DataError(fmt::format("line {}: empty {}", line, what));
  }
  for (char c : id) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == ',') {
      throw DataError(fmt::format("line {}: {} '{}' contains whitespace or ','", line, what, id));
    }
  }
}

std::string required_string(const json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw DataError(fmt::format("line {}: missing field '{}'", line, field));
  }
  if (!it->is_string()) {
    throw DataError(fmt::format("line {}: field '{}' is not a string", line, field));
  }
  return it->get<std::string>();
}

json parse_record(const std::string& text, std::size_t line) {
  json record;
  try {
    record = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(fmt::format("line {}: malformed record ({})", line, e.what()));
  }
  if (!record.is_object()) {
    throw DataError(fmt::format("line {}: record is not an object", line));
  }
  return record;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

std::uint32_t CorpusStats::document_frequency(std::string_view term) const {
  auto it = df_.find(std::string(term));
  return it == df_.end() ? 0 : it->second;
}

Document make_document(std::string doc_id, std::string title, std::string body,
                       const TokenizerOptions& options) {
  Document doc;
  doc.doc_id = std::move(doc_id);
  doc.terms = tokenize(title, options);
  doc.title_terms = doc.terms.size();
  auto body_terms = tokenize(body, options);
  doc.terms.insert(doc.terms.end(), std::make_move_iterator(body_terms.begin()),
                   std::make_move_iterator(body_terms.end()));
  doc.title = std::move(title);
  doc.body = std::move(body);
  return doc;
}

Query make_query(std::string query_id, std::string text, const TokenizerOptions& options) {
  Query q;
  q.query_id = std::move(query_id);
  q.terms = tokenize(text, options);
  q.text = std::move(text);
  return q;
}

Corpus Corpus::from_documents(std::vector<Document> docs) {
  Corpus corpus;
  corpus.by_id_.reserve(docs.size());
  std::unordered_map<std::string, std::uint32_t> df;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    const Document& d = docs[i];
    if (!corpus.by_id_.emplace(d.doc_id, static_cast<DocIndex>(i)).second) {
      throw DataError("duplicate doc_id " + d.doc_id);
    }
    if (d.terms.empty()) {
      throw DataError("document " + d.doc_id + " has no terms");
    }
    std::unordered_set<std::string_view> seen(d.terms.begin(), d.terms.end());
    for (auto t : seen) ++df[std::string(t)];
  }
  corpus.docs_ = std::move(docs);
  corpus.stats_ = CorpusStats(corpus.docs_.size(), std::move(df));
  return corpus;
}

std::optional<DocIndex> Corpus::find(std::string_view doc_id) const {
  auto it = by_id_.find(std::string(doc_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

Corpus ingest_corpus(std::istream& in, const TokenizerOptions& options) {
  std::vector<Document> docs;
  std::unordered_map<std::string, std::size_t> first_line;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    json record = parse_record(text, line);
    std::string doc_id = required_string(record, "doc_id", line);
    check_id(doc_id, "doc_id", line);
    std::string title;
    if (record.contains("title")) title = required_string(record, "title", line);
    std::string body = required_string(record, "body", line);
    if (!first_line.emplace(doc_id, line).second) {
      throw DataError(fmt::format("line {}: duplicate doc_id {}", line, doc_id));
    }
    Document doc = make_document(std::move(doc_id), std::move(title), std::move(body), options);
    if (doc.terms.empty()) {
      throw DataError(fmt::format("line {}: document {} has no terms", line, doc.doc_id));
    }
    docs.push_back(std::move(doc));
  }
  return Corpus::from_documents(std::move(docs));
}

std::vector<Query> ingest_queries(std::istream& in, const TokenizerOptions& options) {
  std::vector<Query> queries;
  std::unordered_set<std::string> ids;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (blank(text)) continue;
    json record = parse_record(text, line);
    std::string query_id = required_string(record, "query_id", line);
    check_id(query_id, "query_id", line);
    std::string body = required_string(record, "text", line);
    if (!ids.insert(query_id).second) {
      throw DataError(fmt::format("line {}: duplicate query_id {}", line, query_id));
    }
    queries.push_back(make_query(std::move(query_id), std::move(body), options));
  }
  return queries;
}

void Judgments::add(const std::string& query_id, const std::string& doc_id, int relevance) {
  if (relevance < 1) {
    throw DataError(fmt::format("relevance for ({}, {}) must be >= 1", query_id, doc_id));
  }
  rel_[query_id][doc_id] = relevance;
}

void Judgments::validate(const Corpus& corpus, const std::vector<Query>* queries) const {
  std::unordered_set<std::string_view> known;
  if (queries != nullptr) {
    for (const auto& q : *queries) known.insert(q.query_id);
  }
  for (const auto& [qid, docs] : rel_) {
    if (queries != nullptr && !known.count(qid)) {
      throw DataError("judgments reference unknown query_id " + qid);
    }
    for (const auto& [doc_id, rel] : docs) {
      if (!corpus.find(doc_id)) {
        throw DataError(fmt::format("judgments for {} reference unknown doc_id {}", qid, doc_id));
      }
    }
  }
}

std::set<std::string> Judgments::relevant(std::string_view query_id) const {
  std::set<std::string> out;
  auto it = rel_.find(query_id);
  if (it == rel_.end()) return out;
  for (const auto& [doc_id, rel] : it->second) out.insert(doc_id);
  return out;
}

bool Judgments::contains(std::string_view query_id) const {
  return rel_.find(query_id) != rel_.end();
}

Judgments parse_judgments(std::istream& in) {
  Judgments judgments;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (blank(text)) continue;
    std::vector<std::string> fields;
    std::stringstream ss(text);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 3) {
      throw DataError(
          fmt::format("line {}: expected 3 tab-separated fields, got {}", line, fields.size()));
    }
    check_id(fields[0], "query_id", line);
    check_id(fields[1], "doc_id", line);
    int relevance = 0;
    std::size_t consumed = 0;
    try {
      relevance = std::stoi(fields[2], &consumed);
    } catch (const std::exception&) {
      consumed = 0;
    }
    if (consumed != fields[2].size() || relevance < 1) {
      throw DataError(
          fmt::format("line {}: relevance '{}' is not an integer >= 1", line, fields[2]));
    }
    judgments.add(fields[0], fields[1], relevance);
  }
  return judgments;
}

void write_judgments(std::ostream& out, const Judgments& judgments) {
  for (const auto& [qid, docs] : judgments.entries()) {
    for (const auto& [doc_id, rel] : docs) out << qid << '\t' << doc_id << '\t' << rel << '\n';
  }
}

std::vector<TrainingPair> sample_negatives(const std::vector<Query>& queries,
                                           const Judgments& judgments, const Corpus& corpus,
                                           std::size_t num_negatives, std::uint64_t seed) {
  if (num_negatives < 1) throw UsageError("number of negatives must be >= 1");
  if (corpus.size() <= num_negatives) {
    throw DataError(fmt::format("corpus of {} documents cannot supply {} negatives", corpus.size(),
                                num_negatives));
  }
  std::unordered_map<std::string_view, std::size_t> query_pos;
  for (std::size_t i = 0; i < queries.size(); ++i) query_pos.emplace(queries[i].query_id, i);

  std::mt19937_64 rng(seed);
  std::vector<TrainingPair> pairs;
  std::vector<DocIndex> pool;
  for (const auto& [qid, docs] : judgments.entries()) {
    auto qit = query_pos.find(qid);
    if (qit == query_pos.end()) throw DataError("judgments reference unknown query_id " + qid);

    std::vector<char> relevant(corpus.size(), 0);
    std::vector<DocIndex> positives;
    for (const auto& [doc_id, rel] : docs) {
      auto d = corpus.find(doc_id);
      if (!d) throw DataError("judgments reference unknown doc_id " + doc_id);
      relevant[*d] = 1;
      positives.push_back(*d);
    }
    pool.clear();
    for (DocIndex d = 0; d < corpus.size(); ++d) {
      if (!relevant[d]) pool.push_back(d);
    }
    if (pool.size() < num_negatives) {
      throw DataError(fmt::format("query {} has only {} non-relevant documents, {} required", qid,
                                  pool.size(), num_negatives));
    }
    for (DocIndex positive : positives) {
      TrainingPair pair;
      pair.query = qit->second;
      pair.positive = positive;
      // Partial Fisher-Yates over the non-relevant pool.
      std::vector<DocIndex> scratch = pool;
      for (std::size_t k = 0; k < num_negatives; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, scratch.size() - 1);
        std::swap(scratch[k], scratch[pick(rng)]);
        pair.negatives.push_back(scratch[k]);
      }
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

void write_corpus(std::ostream& out, const Corpus& corpus) {
  for (const auto& d : corpus.documents()) {
    json record = {{"doc_id", d.doc_id}, {"title", d.title}, {"body", d.body}};
    out << record.dump() << '\n';
  }
}

void write_queries(std::ostream& out, const std::vector<Query>& queries) {
  for (const auto& q : queries) {
    json record = {{"query_id", q.query_id}, {"text", q.text}};
    out << record.dump() << '\n';
  }
}

}  // namespace termset
