#include "termset/scorer.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "termset/error.hpp"

namespace termset {
namespace {

constexpr std::string_view kScorerMagic = "termset-scorer";

double dot(const StepFeatures& a, const StepFeatures& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < kStepFeatureCount; ++i) s += a[i] * b[i];
  return s;
}

double log_sum_exp(std::span<const double> v) {
  const double top = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(top)) return top;
  double z = 0.0;
  for (double x : v) z += std::exp(x - top);
  return top + std::log(z);
}

}  // namespace

bool QueryContext::contains(TermId term) const {
  return std::binary_search(in_query.begin(), in_query.end(), term);
}

bool QueryContext::shares_prefix(TermId term) const {
  return std::binary_search(prefix_match.begin(), prefix_match.end(), term);
}

QueryContext make_query_context(std::string query_id, const std::vector<std::string>& terms,
                                const TermDictionary& dict) {
  QueryContext q;
  q.query_id = std::move(query_id);
  q.terms = terms;
  for (const auto& t : terms) {
    if (auto id = dict.find(t)) q.in_query.push_back(*id);
    if (codepoint_count(t) >= 4) {
      auto matches = dict.with_prefix4(codepoint_prefix(t, 4));
      q.prefix_match.insert(q.prefix_match.end(), matches.begin(), matches.end());
    }
  }
  for (auto* v : {&q.in_query, &q.prefix_match}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  return q;
}

void log_normalize(std::vector<double>& scores) {
  if (scores.empty()) return;
  const double z = log_sum_exp(scores);
  for (double& s : scores) s -= z;
}

std::vector<double> UniformScorer::step_logprob(const QueryContext&, const PrefixNode&,
                                                std::span<const TermId> candidates) const {
  if (candidates.empty()) throw DataError("step_logprob: empty candidate set");
  return std::vector<double>(candidates.size(), -std::log(static_cast<double>(candidates.size())));
}

double sequence_logprob(const Scorer& scorer, const QueryContext& query,
                        std::span<const TermId> sequence, const Index& index, IdentifierForm form) {
  double total = 0.0;
  PrefixNode node = index.root(form);
  for (TermId term : sequence) {
    const auto pos = node.feasible_position(term);
    if (!pos) {
      throw DataError(fmt::format(
          "sequence step '{}' is infeasible at depth {}",
          term < index.dictionary().size() ? index.dictionary().term(term) : std::to_string(term),
          node.depth()));
    }
    total += scorer.step_logprob(query, node, node.feasible())[*pos];
    node = index.extend(node, term);
  }
  return total;
}

FeatureScorer::FeatureScorer(const Index& index,
                             const std::unordered_map<std::string, double>& max_importance,
                             const StepFeatures& weights)
    : weights_(weights), vocabulary_(index.dictionary().terms()) {
  priors_.reserve(vocabulary_.size());
  for (const auto& t : vocabulary_) {
    auto it = max_importance.find(t);
    priors_.push_back(it == max_importance.end() ? 0.0 : it->second);
  }
}

void FeatureScorer::check_vocabulary(const Index& index) const {
  const auto& terms = index.dictionary().terms();
  if (terms.size() != vocabulary_.size() ||
      !std::equal(terms.begin(), terms.end(), vocabulary_.begin())) {
    throw DataError(
        fmt::format("vocabulary mismatch between index ({} terms) and scorer ({} terms)",
                    terms.size(), vocabulary_.size()));
  }
}

StepFeatures FeatureScorer::features(const QueryContext& query, const PrefixNode& node,
                                     TermId candidate) const {
  const double n = static_cast<double>(std::max<std::size_t>(node.identifier_length(), 1));
  return {
      query.contains(candidate) ? 1.0 : 0.0,
      query.shares_prefix(candidate) ? 1.0 : 0.0,
      candidate < priors_.size() ? priors_[candidate] : 0.0,
      std::log1p(static_cast<double>(node.child_count(candidate))),
      static_cast<double>(node.depth()) / n,
      1.0,
  };
}

std::vector<double> FeatureScorer::step_logprob(const QueryContext& query, const PrefixNode& node,
                                                std::span<const TermId> candidates) const {
  if (candidates.empty()) throw DataError("step_logprob: empty candidate set");
  std::vector<double> out;
  out.reserve(candidates.size());
  for (TermId c : candidates) out.push_back(dot(weights_, features(query, node, c)));
  log_normalize(out);
  return out;
}

PreparedSequence FeatureScorer::prepare(const QueryContext& query, std::span<const TermId> target,
                                        const Index& index, IdentifierForm form) const {
  PreparedSequence seq;
  seq.steps.reserve(target.size());
  PrefixNode node = index.root(form);
  for (TermId term : target) {
    const auto pos = node.feasible_position(term);
    if (!pos) throw DataError("training target is not a valid identifier permutation");
    PreparedStep step;
    step.target = *pos;
    step.candidates.reserve(node.feasible().size());
    for (TermId c : node.feasible()) step.candidates.push_back(features(query, node, c));
    seq.steps.push_back(std::move(step));
    node = index.extend(node, term);
  }
  return seq;
}

double FeatureScorer::loss(std::span<const PreparedSequence> batch) const {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  std::vector<double> logits;
  for (const auto& seq : batch) {
    for (const auto& step : seq.steps) {
      logits.clear();
      for (const auto& f : step.candidates) logits.push_back(dot(weights_, f));
      total += log_sum_exp(logits) - logits[step.target];
    }
  }
  return total / static_cast<double>(batch.size());
}

double FeatureScorer::loss_and_gradient(std::span<const PreparedSequence> batch,
                                        StepFeatures& gradient) const {
  gradient.fill(0.0);
  if (batch.empty()) return 0.0;
  double total = 0.0;
  std::vector<double> logits;
  for (const auto& seq : batch) {
    for (const auto& step : seq.steps) {
      logits.clear();
      for (const auto& f : step.candidates) logits.push_back(dot(weights_, f));
      const double z = log_sum_exp(logits);
      total += z - logits[step.target];
      for (std::size_t c = 0; c < step.candidates.size(); ++c) {
        const double p = std::exp(logits[c] - z);
        for (std::size_t i = 0; i < kStepFeatureCount; ++i)
          gradient[i] += p * step.candidates[c][i];
      }
      for (std::size_t i = 0; i < kStepFeatureCount; ++i) {
        gradient[i] -= step.candidates[step.target][i];
      }
    }
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (double& g : gradient) g *= scale;
  return total * scale;
}

double FeatureScorer::train_step(std::span<const PreparedSequence> batch, double learning_rate) {
  StepFeatures gradient{};
  const double before = loss_and_gradient(batch, gradient);
  if (!std::isfinite(before)) {
    throw InvariantError(fmt::format("scorer training diverged: loss={} (lr={}, weights=[{}])",
                                     before, learning_rate, fmt::join(weights_, ", ")));
  }
  for (std::size_t i = 0; i < kStepFeatureCount; ++i) weights_[i] -= learning_rate * gradient[i];
  return before;
}

void FeatureScorer::save(std::ostream& out) const {
  out << kScorerMagic << ' ' << kFormatVersion << '\n';
  out << "schema " << kSchema << '\n';
  out << "weights " << kStepFeatureCount << '\n';
  for (std::size_t i = 0; i < kStepFeatureCount; ++i) {
    out << kStepFeatureNames[i] << ' ' << fmt::format("{}", weights_[i]) << '\n';
  }
  out << "vocabulary " << vocabulary_.size() << '\n';
  for (std::size_t t = 0; t < vocabulary_.size(); ++t) {
    out << vocabulary_[t] << '\t' << fmt::format("{}", priors_[t]) << '\n';
  }
}

FeatureScorer FeatureScorer::load(std::istream& in) {
  std::string magic, key, schema;
  int version = 0;
  if (!(in >> magic >> version) || magic != kScorerMagic) throw DataError("not a scorer file");
  if (version != kFormatVersion) {
    throw DataError(fmt::format("unsupported scorer version {}", version));
  }
  if (!(in >> key >> schema) || key != "schema" || schema != kSchema) {
    throw DataError("scorer schema mismatch (expected " + std::string(kSchema) + ")");
  }
  std::size_t count = 0;
  if (!(in >> key >> count) || key != "weights" || count != kStepFeatureCount) {
    throw DataError("scorer: bad weight block");
  }
  FeatureScorer scorer;
  for (std::size_t i = 0; i < kStepFeatureCount; ++i) {
    if (!(in >> key >> scorer.weights_[i]) || key != kStepFeatureNames[i]) {
      throw DataError(fmt::format("scorer: expected weight '{}'", kStepFeatureNames[i]));
    }
  }
  if (!(in >> key >> count) || key != "vocabulary") throw DataError("scorer: missing vocabulary");
  in.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
  std::string line;
  for (std::size_t t = 0; t < count; ++t) {
    if (!std::getline(in, line)) throw DataError("scorer: truncated vocabulary");
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw DataError("scorer: malformed vocabulary line");
    scorer.vocabulary_.push_back(line.substr(0, tab));
    try {
      scorer.priors_.push_back(std::stod(line.substr(tab + 1)));
    } catch (const std::exception&) {
      throw DataError("scorer: malformed prior for term " + scorer.vocabulary_.back());
    }
  }
  return scorer;
}

std::vector<double> SubwordScorerAdapter::step_logprob(const QueryContext& query,
                                                       const PrefixNode& node,
                                                       std::span<const TermId> candidates) const {
  if (candidates.empty()) throw DataError("step_logprob: empty candidate set");
  std::vector<std::string> history;
  for (TermId t : node.sequence()) {
    for (auto& tok : model_.split(dict_.term(t))) history.push_back(std::move(tok));
    history.push_back(separator_);
  }
  std::vector<double> out;
  out.reserve(candidates.size());
  for (TermId c : candidates) {
    std::vector<std::string> context = history;
    std::vector<std::string> tokens = model_.split(dict_.term(c));
    tokens.push_back(separator_);
    double lp = 0.0;
    for (auto& tok : tokens) {
      lp += model_.token_logprob(query, context, tok);
      context.push_back(std::move(tok));
    }
    out.push_back(lp);
  }
  if (renormalize_) log_normalize(out);
  return out;
}

}  // namespace termset
