#include "termset/importance.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_set>

#include "termset/error.hpp"

namespace termset {
namespace {

constexpr std::string_view kModelMagic = "termset-importance-model";

double dot(const TermFeatures& a, const TermFeatures& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kTermFeatureCount; ++i) s += a[i] * b[i];
  return s;
}

TermWeights score_occurrences(const ImportanceModel& model,
                              const std::vector<TermOccurrence>& occurrences, std::size_t length,
                              const CorpusStats& stats) {
  TermWeights out;
  out.reserve(occurrences.size());
  for (const auto& occ : occurrences) {
    out.push_back({occ.term, model.weight(featurize(occ, length, stats)), occ.first_position});
  }
  return out;
}

}  // namespace

std::vector<TermOccurrence> distinct_terms(const std::vector<std::string>& terms,
                                           std::size_t title_terms) {
  std::vector<TermOccurrence> out;
  std::unordered_map<std::string_view, std::size_t> slot;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    auto [it, inserted] = slot.emplace(terms[i], out.size());
    if (inserted) {
      out.push_back({terms[i], i, 0, i < title_terms});
    }
    ++out[it->second].count;
  }
  return out;
}

TermFeatures featurize(const TermOccurrence& occurrence, std::size_t length,
                       const CorpusStats& stats) {
  const double len = static_cast<double>(std::max<std::size_t>(length, 1));
  const double df = std::max<std::uint32_t>(stats.document_frequency(occurrence.term), 1);
  const double docs = static_cast<double>(std::max<std::size_t>(stats.doc_count(), 1));
  return {
      static_cast<double>(occurrence.count) / len,
      std::log(docs / df),
      occurrence.in_title ? 1.0 : 0.0,
      static_cast<double>(occurrence.first_position) / len,
      static_cast<double>(codepoint_count(occurrence.term)) / 10.0,
      1.0,
  };
}

TermFeatures featurize_term(std::string_view term, const Document& doc, const CorpusStats& stats) {
  for (const auto& occ : distinct_terms(doc.terms, doc.title_terms)) {
    if (occ.term == term) return featurize(occ, doc.terms.size(), stats);
  }
  throw DataError(fmt::format("term '{}' does not occur in document {}", term, doc.doc_id));
}

ImportanceModel::ImportanceModel(const TermFeatures& weights, double temperature)
    : weights_(weights), temperature_(temperature) {
  if (!(temperature > 0.0)) throw UsageError("temperature must be > 0");
}

double ImportanceModel::pre_activation(const TermFeatures& features) const {
  return dot(weights_, features);
}

double ImportanceModel::weight(const TermFeatures& features) const {
  return std::max(0.0, pre_activation(features));
}

void ImportanceModel::save(std::ostream& out) const {
  out << kModelMagic << ' ' << kFormatVersion << '\n';
  out << "temperature " << fmt::format("{}", temperature_) << '\n';
  out << "features " << kTermFeatureCount << '\n';
  for (std::size_t i = 0; i < kTermFeatureCount; ++i) {
    out << kTermFeatureNames[i] << ' ' << fmt::format("{}", weights_[i]) << '\n';
  }
}

ImportanceModel ImportanceModel::load(std::istream& in) {
  std::string magic;
  int version = 0;
  if (!(in >> magic >> version) || magic != kModelMagic) {
    throw DataError("not an importance model file");
  }
  if (version != kFormatVersion) {
    throw DataError(fmt::format("unsupported importance model version {}", version));
  }
  std::string key;
  double temperature = 0.0;
  std::size_t count = 0;
  if (!(in >> key >> temperature) || key != "temperature") {
    throw DataError("importance model: expected 'temperature'");
  }
  if (!(in >> key >> count) || key != "features" || count != kTermFeatureCount) {
    throw DataError("importance model: feature schema mismatch");
  }
  TermFeatures weights{};
  for (std::size_t i = 0; i < kTermFeatureCount; ++i) {
    if (!(in >> key >> weights[i]) || key != kTermFeatureNames[i]) {
      throw DataError(fmt::format("importance model: expected feature '{}'", kTermFeatureNames[i]));
    }
  }
  if (!(temperature > 0.0)) throw DataError("importance model: temperature must be > 0");
  return ImportanceModel(weights, temperature);
}

TermWeights score_terms(const ImportanceModel& model, const Document& doc,
                        const CorpusStats& stats) {
  return score_occurrences(model, distinct_terms(doc.terms, doc.title_terms), doc.terms.size(),
                           stats);
}

TermWeights score_query_terms(const ImportanceModel& model, const Query& query,
                              const CorpusStats& stats) {
  return score_occurrences(model, distinct_terms(query.terms, 0), query.terms.size(), stats);
}

ImportedTermWeights ImportedTermWeights::load(std::istream& in) {
  ImportedTermWeights out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    std::stringstream ss(text);
    std::string doc_id, term, weight;
    if (!std::getline(ss, doc_id, '\t') || !std::getline(ss, term, '\t') ||
        !std::getline(ss, weight)) {
      throw DataError(fmt::format("line {}: expected doc_id<TAB>term<TAB>weight", line));
    }
    double w = 0.0;
    try {
      w = std::stod(weight);
    } catch (const std::exception&) {
      throw DataError(fmt::format("line {}: bad weight '{}'", line, weight));
    }
    if (!std::isfinite(w)) throw DataError(fmt::format("line {}: non-finite weight", line));
    out.table_[doc_id][term] = std::max(0.0, w);
  }
  return out;
}

TermWeights ImportedTermWeights::score_document(const Document& doc) const {
  TermWeights out;
  auto table = table_.find(doc.doc_id);
  for (const auto& occ : distinct_terms(doc.terms, doc.title_terms)) {
    double w = 0.0;
    if (table != table_.end()) {
      auto it = table->second.find(occ.term);
      if (it != table->second.end()) w = it->second;
    }
    out.push_back({occ.term, w, occ.first_position});
  }
  return out;
}

InfoNceObjective::InfoNceObjective(const std::vector<TrainingPair>& pairs,
                                   const std::vector<Query>& queries, const Corpus& corpus,
                                   double temperature)
    : temperature_(temperature) {
  if (!(temperature > 0.0)) throw UsageError("temperature must be > 0");
  if (pairs.empty()) throw DataError("no training pairs for importance training");
  const CorpusStats& stats = corpus.stats();

  struct Side {
    std::unordered_map<std::string_view, TermFeatures> features;
  };
  auto doc_side = [&](DocIndex d) {
    const Document& doc = corpus.doc(d);
    Side side;
    for (const auto& occ : distinct_terms(doc.terms, doc.title_terms)) {
      side.features.emplace(doc.terms[occ.first_position], featurize(occ, doc.terms.size(), stats));
    }
    return side;
  };

  pairs_.reserve(pairs.size());
  for (const TrainingPair& tp : pairs) {
    const Query& q = queries.at(tp.query);
    std::vector<std::pair<std::string_view, TermFeatures>> query_side;
    for (const auto& occ : distinct_terms(q.terms, 0)) {
      query_side.emplace_back(q.terms[occ.first_position], featurize(occ, q.terms.size(), stats));
    }
    Pair pair;
    std::vector<DocIndex> candidates{tp.positive};
    candidates.insert(candidates.end(), tp.negatives.begin(), tp.negatives.end());
    for (DocIndex d : candidates) {
      Side side = doc_side(d);
      Candidate cand;
      for (const auto& [term, qf] : query_side) {
        auto it = side.features.find(term);
        if (it != side.features.end()) cand.push_back({qf, it->second});
      }
      pair.candidates.push_back(std::move(cand));
    }
    pairs_.push_back(std::move(pair));
  }
}

double InfoNceObjective::pair_loss(const Pair& pair, const TermFeatures& weights,
                                   TermFeatures* gradient) const {
  const std::size_t n = pair.candidates.size();
  std::vector<double> logits(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    double s = 0.0;
    for (const Match& m : pair.candidates[c]) {
      s += std::max(0.0, dot(weights, m.query)) * std::max(0.0, dot(weights, m.doc));
    }
    logits[c] = s / temperature_;
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double l : logits) z += std::exp(l - top);
  const double log_z = top + std::log(z);
  const double loss = log_z - logits[0];

  if (gradient != nullptr) {
    for (std::size_t c = 0; c < n; ++c) {
      // d loss / d logit_c = p_c - [c == positive]
      const double coeff = (std::exp(logits[c] - log_z) - (c == 0 ? 1.0 : 0.0)) / temperature_;
      if (coeff == 0.0) continue;
      for (const Match& m : pair.candidates[c]) {
        const double aq = dot(weights, m.query);
        const double ad = dot(weights, m.doc);
        const double wq = std::max(0.0, aq);
        const double wd = std::max(0.0, ad);
        for (std::size_t i = 0; i < kTermFeatureCount; ++i) {
          double g = 0.0;
          if (aq > 0.0) g += m.query[i] * wd;
          if (ad > 0.0) g += wq * m.doc[i];
          (*gradient)[i] += coeff * g;
        }
      }
    }
  }
  return loss;
}

double InfoNceObjective::loss(const TermFeatures& weights) const {
  double total = 0.0;
  for (const Pair& p : pairs_) total += pair_loss(p, weights, nullptr);
  return total / static_cast<double>(pairs_.size());
}

double InfoNceObjective::loss_and_gradient(const TermFeatures& weights,
                                           TermFeatures& gradient) const {
  gradient.fill(0.0);
  double total = 0.0;
  for (const Pair& p : pairs_) total += pair_loss(p, weights, &gradient);
  const double scale = 1.0 / static_cast<double>(pairs_.size());
  for (double& g : gradient) g *= scale;
  return total * scale;
}

std::vector<double> InfoNceObjective::pair_losses(const TermFeatures& weights) const {
  std::vector<double> out;
  out.reserve(pairs_.size());
  for (const Pair& p : pairs_) out.push_back(pair_loss(p, weights, nullptr));
  return out;
}

ImportanceTrainingResult train_importance(const std::vector<TrainingPair>& pairs,
                                          const std::vector<Query>& queries, const Corpus& corpus,
                                          const ImportanceTrainingOptions& options) {
  InfoNceObjective objective(pairs, queries, corpus, options.temperature);

  // Positive start: every feature is >= 0, so all pre-activations begin
  // positive and the ReLU passes gradient.
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> init(0.05, 0.15);
  TermFeatures weights{};
  for (double& w : weights) w = init(rng);

  ImportanceTrainingResult result;
  TermFeatures gradient{};
  for (std::size_t epoch = 0; epoch <= options.epochs; ++epoch) {
    const bool last = epoch == options.epochs;
    const double loss =
        last ? objective.loss(weights) : objective.loss_and_gradient(weights, gradient);
    if (!std::isfinite(loss)) {
      throw InvariantError(fmt::format(
          "importance training diverged: loss={} at epoch {} (lr={}, tau={}, weights=[{}])", loss,
          epoch, options.learning_rate, options.temperature, fmt::join(weights, ", ")));
    }
    result.loss_history.push_back(loss);
    if (last) break;
    for (std::size_t i = 0; i < kTermFeatureCount; ++i) {
      weights[i] -= options.learning_rate * gradient[i];
    }
  }
  result.model = ImportanceModel(weights, options.temperature);
  return result;
}

}  // namespace termset
