#include "termset/pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "termset/error.hpp"

namespace termset {
namespace {

std::unordered_map<std::string, const Query*> by_id(const std::vector<Query>& queries) {
  std::unordered_map<std::string, const Query*> out;
  for (const Query& q : queries) out.emplace(q.query_id, &q);
  return out;
}

void add_examples(TrainingData& data, const Index& index, const Query& query,
                  const Judgments& judgments, bool pseudo) {
  const QueryContext context = make_query_context(query.query_id, query.terms, index.dictionary());
  for (const auto& doc_id : judgments.relevant(query.query_id)) {
    const auto doc = index.find_doc(doc_id);
    if (!doc) {
      throw DataError(
          fmt::format("query {} judges document {} which is not indexed", query.query_id, doc_id));
    }
    data.train.push_back({context, *doc, pseudo});
  }
}

}  // namespace

TermBuildResult build_terms(const Corpus& corpus, const std::vector<Query>& queries,
                            const Judgments& judgments, const TermBuildOptions& options) {
  const auto pairs =
      sample_negatives(queries, judgments, corpus, options.negatives, options.training.seed);
  ImportanceTrainingResult trained = train_importance(pairs, queries, corpus, options.training);
  const FeatureImportance estimator(trained.model, corpus.stats());
  TermBuildResult result;
  result.model = trained.model;
  result.loss_history = std::move(trained.loss_history);
  result.scan =
      choose_identifier_length(rank_corpus(estimator, corpus), options.n_min, options.n_max);
  return result;
}

std::unordered_map<std::string, double> max_importance(const ImportanceModel& model,
                                                       const Corpus& corpus) {
  std::unordered_map<std::string, double> out;
  for (const Document& doc : corpus.documents()) {
    for (const TermWeight& w : score_terms(model, doc, corpus.stats())) {
      auto [it, inserted] = out.emplace(w.term, w.weight);
      if (!inserted) it->second = std::max(it->second, w.weight);
    }
  }
  return out;
}

std::vector<QueryContext> make_contexts(const std::vector<Query>& queries,
                                        const TermDictionary& dict) {
  std::vector<QueryContext> out;
  out.reserve(queries.size());
  for (const Query& q : queries) out.push_back(make_query_context(q.query_id, q.terms, dict));
  return out;
}

TrainingData make_training_data(const Index& index, const std::vector<Query>& queries,
                                const Judgments& judgments, const TrainingSplit& split,
                                const std::vector<Query>* pseudo_queries,
                                const Judgments* pseudo_judgments) {
  if (!(split.validation_fraction > 0.0 && split.validation_fraction < 1.0)) {
    throw UsageError("validation fraction must lie strictly between 0 and 1");
  }
  const auto lookup = by_id(queries);
  std::vector<std::string> judged;
  for (const auto& [query, docs] : judgments.entries()) {
    if (lookup.count(query) == 0) throw DataError("judged query " + query + " has no query text");
    judged.push_back(query);
  }
  if (judged.size() < 2) throw DataError("need at least two judged queries to hold one out");
  std::mt19937_64 rng(split.seed);
  std::shuffle(judged.begin(), judged.end(), rng);
  const auto held = std::clamp<std::size_t>(
      static_cast<std::size_t>(
          std::llround(split.validation_fraction * static_cast<double>(judged.size()))),
      1, judged.size() - 1);

  TrainingData data;
  std::set<std::string> validation(judged.begin(),
                                   judged.begin() + static_cast<std::ptrdiff_t>(held));
  std::set<std::string> training(judged.begin() + static_cast<std::ptrdiff_t>(held), judged.end());
  for (const auto& id : training) add_examples(data, index, *lookup.at(id), judgments, false);
  for (const auto& id : validation) {
    const Query& q = *lookup.at(id);
    data.validation_queries.push_back(make_query_context(q.query_id, q.terms, index.dictionary()));
    for (const auto& [doc, rel] : judgments.entries().find(id)->second) {
      data.validation_judgments.add(id, doc, rel);
    }
  }
  if (pseudo_queries != nullptr) {
    if (pseudo_judgments == nullptr) throw UsageError("pseudo queries need their judgments");
    const auto pseudo_lookup = by_id(*pseudo_queries);
    for (const auto& [query, docs] : pseudo_judgments->entries()) {
      auto it = pseudo_lookup.find(query);
      if (it == pseudo_lookup.end())
        throw DataError("judged pseudo query " + query + " has no text");
      if (lookup.count(query) > 0)
        throw DataError("pseudo query id " + query + " clashes with a real query");
      add_examples(data, index, *it->second, *pseudo_judgments, true);
    }
  }
  return data;
}

TrainingData make_training_data(const Index& index, const std::vector<Query>& train_queries,
                                const Judgments& train_judgments,
                                const std::vector<Query>& validation_queries,
                                const Judgments& validation_judgments) {
  TrainingData data;
  const auto lookup = by_id(train_queries);
  for (const auto& [query, docs] : train_judgments.entries()) {
    auto it = lookup.find(query);
    if (it == lookup.end()) throw DataError("judged query " + query + " has no query text");
    add_examples(data, index, *it->second, train_judgments, false);
  }
  for (const Query& q : validation_queries) {
    if (!validation_judgments.contains(q.query_id)) continue;
    data.validation_queries.push_back(make_query_context(q.query_id, q.terms, index.dictionary()));
    for (const auto& [doc, rel] : validation_judgments.entries().find(q.query_id)->second) {
      data.validation_judgments.add(q.query_id, doc, rel);
    }
  }
  return data;
}

}  // namespace termset
