#include "termset/learning.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <ostream>
#include <random>

#include "termset/error.hpp"
#include "termset/eval.hpp"
#include "termset/parallel.hpp"

namespace termset {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Remaining identifier terms ranked by step log-probability, ties to the
// earlier stored position. Returns (stored position, logprob) pairs.
std::vector<std::pair<std::size_t, double>> rank_remaining(const QueryContext& query,
                                                           const Scorer& scorer,
                                                           const PrefixNode& node,
                                                           const std::vector<TermId>& ordered,
                                                           const std::vector<bool>& used) {
  const auto feasible = node.feasible();
  const std::vector<double> logp = scorer.step_logprob(query, node, feasible);
  std::vector<std::pair<std::size_t, double>> ranked;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (used[i]) continue;
    const auto pos = node.feasible_position(ordered[i]);
    if (!pos) throw InvariantError("identifier term is not feasible under its own prefix");
    ranked.emplace_back(i, logp[*pos]);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return ranked;
}

double mean_loglik(const FeatureScorer& scorer, const std::vector<PreparedSequence>& batch) {
  return -scorer.loss(batch);
}

// Full-batch gradient descent. A step that would raise the loss is retried
// at half the rate, so the loss never increases.
double fit(FeatureScorer& scorer, const std::vector<PreparedSequence>& batch,
           const TrainingConfig& config) {
  double rate = config.learning_rate;
  StepFeatures gradient{};
  double loss = scorer.loss_and_gradient(batch, gradient);
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    if (!std::isfinite(loss)) {
      throw InvariantError(fmt::format("scorer loss became {} at epoch {}", loss, epoch));
    }
    const StepFeatures before = scorer.weights();
    bool accepted = false;
    for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
      StepFeatures w = before;
      for (std::size_t i = 0; i < kStepFeatureCount; ++i) w[i] -= rate * gradient[i];
      scorer.set_weights(w);
      StepFeatures next_gradient{};
      const double next = scorer.loss_and_gradient(batch, next_gradient);
      if (std::isfinite(next) && next <= loss) {
        loss = next;
        gradient = next_gradient;
        accepted = true;
      } else {
        rate *= 0.5;
      }
    }
    if (!accepted) {
      scorer.set_weights(before);
      break;
    }
  }
  return loss;
}

}  // namespace

std::string_view to_string(InitPolicy policy) {
  switch (policy) {
    case InitPolicy::kImportance:
      return "importance";
    case InitPolicy::kRandom:
      return "random";
    case InitPolicy::kLikelihood:
      return "likelihood";
  }
  return "importance";
}

InitPolicy parse_init_policy(std::string_view name) {
  if (name == "importance") return InitPolicy::kImportance;
  if (name == "random") return InitPolicy::kRandom;
  if (name == "likelihood") return InitPolicy::kLikelihood;
  throw UsageError(fmt::format("unknown init policy '{}' (importance, random, likelihood)", name));
}

void TrainingConfig::validate() const {
  if (iterations == 0) throw UsageError("iterations must be >= 1");
  if (samples == 0) throw UsageError("samples must be >= 1");
  if (topk_sampling == 0) throw UsageError("topk_sampling must be >= 1");
  if (beam_eval == 0) throw UsageError("beam_eval must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw UsageError("lr must be a positive number");
  }
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

std::vector<TermId> init_permutation(const Index& index, DocIndex doc, InitPolicy policy,
                                     const Scorer* scorer, const QueryContext* query,
                                     std::uint64_t seed) {
  const std::vector<TermId>& ordered = index.doc(doc).ordered;
  switch (policy) {
    case InitPolicy::kImportance:
      return ordered;
    case InitPolicy::kRandom: {
      std::vector<TermId> perm = ordered;
      std::mt19937_64 rng(seed);
      std::shuffle(perm.begin(), perm.end(), rng);
      return perm;
    }
    case InitPolicy::kLikelihood: {
      if (scorer == nullptr) throw UsageError("likelihood initialisation needs a scorer");
      QueryContext empty;
      const QueryContext& q = query != nullptr ? *query : empty;
      std::vector<bool> used(ordered.size(), false);
      std::vector<TermId> perm;
      PrefixNode node = index.root();
      while (perm.size() < ordered.size()) {
        const auto ranked = rank_remaining(q, *scorer, node, ordered, used);
        const std::size_t pick = ranked.front().first;
        used[pick] = true;
        perm.push_back(ordered[pick]);
        node = index.extend(node, ordered[pick]);
      }
      return perm;
    }
  }
  return ordered;
}

std::vector<std::vector<TermId>> sample_permutations(const QueryContext& query, DocIndex doc,
                                                     const Scorer& scorer, const Index& index,
                                                     std::size_t count, std::size_t topk,
                                                     std::uint64_t seed) {
  if (count == 0) throw UsageError("sample count must be >= 1");
  if (topk == 0) throw UsageError("top-k sampling cutoff must be >= 1");
  const std::vector<TermId>& ordered = index.doc(doc).ordered;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<TermId>> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    if (topk == 1 && !out.empty()) {
      out.push_back(out.front());
      continue;
    }
    std::vector<bool> used(ordered.size(), false);
    std::vector<TermId> perm;
    PrefixNode node = index.root();
    while (perm.size() < ordered.size()) {
      auto ranked = rank_remaining(query, scorer, node, ordered, used);
      if (ranked.size() > topk) ranked.resize(topk);
      std::size_t pick = ranked.front().first;
      if (ranked.size() > 1) {
        const double top = ranked.front().second;
        std::vector<double> mass;
        double total = 0.0;
        for (const auto& [i, lp] : ranked) total += mass.emplace_back(std::exp(lp - top));
        double u = unit(rng) * total;
        pick = ranked.back().first;
        for (std::size_t r = 0; r < ranked.size(); ++r) {
          if (u < mass[r]) {
            pick = ranked[r].first;
            break;
          }
          u -= mass[r];
        }
      }
      used[pick] = true;
      perm.push_back(ordered[pick]);
      node = index.extend(node, ordered[pick]);
    }
    out.push_back(std::move(perm));
  }
  return out;
}

std::vector<TermId> select_objective(const std::vector<std::vector<TermId>>& candidates,
                                     const QueryContext& query, const Scorer& scorer,
                                     const Index& index) {
  if (candidates.empty()) throw DataError("select_objective needs at least one candidate");
  std::vector<TermId> reference = candidates.front();
  std::sort(reference.begin(), reference.end());
  if (std::adjacent_find(reference.begin(), reference.end()) != reference.end()) {
    throw DataError("candidate permutation repeats a term");
  }
  const std::vector<TermId>* best = nullptr;
  double best_ll = 0.0;
  for (const auto& c : candidates) {
    std::vector<TermId> sorted = c;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != reference) throw DataError("candidates are not permutations of one identifier");
    const double ll = sequence_logprob(scorer, query, c, index);
    if (best == nullptr || ll > best_ll || (ll == best_ll && c < *best)) {
      best = &c;
      best_ll = ll;
    }
  }
  return *best;
}

double validation_recall10(const Index& index, const Scorer& scorer, const TrainingData& data,
                           const TrainingConfig& config) {
  DecoderOptions options;
  options.beam = config.beam_eval;
  const auto results = search_all(data.validation_queries, index, scorer, options, config.threads);
  return evaluate_rankings(rankings_from_results(results), data.validation_judgments, {10})
      .recall_at(10);
}

TrainingResult run_training(const Index& index, const FeatureScorer& initial,
                            const TrainingData& data, const TrainingConfig& config) {
  config.validate();
  if (data.train.empty()) throw DataError("no training pairs");
  if (data.validation_queries.empty()) throw DataError("empty validation set");
  initial.check_vocabulary(index);
  for (const auto& ex : data.train) {
    if (ex.doc >= index.doc_count()) throw DataError("training pair refers to an unknown document");
  }

  const std::size_t count = data.train.size();
  const std::size_t pseudo = static_cast<std::size_t>(std::count_if(
      data.train.begin(), data.train.end(), [](const TrainingExample& e) { return e.pseudo; }));

  TrainingResult result;
  result.scorer = initial;
  FeatureScorer model = initial;
  std::vector<std::vector<TermId>> targets(count);
  std::vector<PreparedSequence> batch(count);

  for (std::size_t t = 1; t <= config.iterations; ++t) {
    const FeatureScorer frozen = model;
    std::vector<std::vector<TermId>> next(count);
    parallel_for(count, config.threads, [&](std::size_t i) {
      const TrainingExample& ex = data.train[i];
      const std::uint64_t seed = derive_seed(config.seed, t, i);
      if (t == 1) {
        next[i] = init_permutation(index, ex.doc, config.init, &frozen, &ex.query, seed);
        return;
      }
      auto candidates = sample_permutations(ex.query, ex.doc, frozen, index, config.samples,
                                            config.topk_sampling, seed);
      if (config.keep_previous_target) candidates.push_back(targets[i]);
      next[i] = select_objective(candidates, ex.query, frozen, index);
    });

    IterationStats stats;
    stats.iteration = t;
    stats.pairs = count;
    stats.pseudo_pairs = pseudo;
    if (t > 1) {
      std::size_t changed = 0;
      for (std::size_t i = 0; i < count; ++i) changed += next[i] != targets[i] ? 1 : 0;
      stats.churn = static_cast<double>(changed) / static_cast<double>(count);
    }

    parallel_for(count, config.threads, [&](std::size_t i) {
      batch[i] = model.prepare(data.train[i].query, next[i], index);
    });
    stats.train_loss = fit(model, batch, config);
    stats.mean_objective_loglik = mean_loglik(model, batch);
    stats.validation_recall10 = validation_recall10(index, model, data, config);
    result.stats.push_back(stats);

    if (t > 1 && stats.validation_recall10 <= result.validation_recall10) {
      // No improvement: stop, keeping the earlier model unless this one ties.
      if (stats.validation_recall10 == result.validation_recall10) {
        result.scorer = model;
        result.kept_iteration = t;
        result.targets = next;
      }
      break;
    }
    result.scorer = model;
    result.validation_recall10 = stats.validation_recall10;
    result.kept_iteration = t;
    result.targets = next;
    targets = std::move(next);
  }
  return result;
}

void write_iteration_stats(std::ostream& out, const std::vector<IterationStats>& stats) {
  for (const IterationStats& s : stats) {
    nlohmann::ordered_json rec;
    rec["iteration"] = s.iteration;
    rec["mean_objective_loglik"] = s.mean_objective_loglik;
    rec["validation_recall10"] = s.validation_recall10;
    rec["churn"] = s.churn;
    rec["train_loss"] = s.train_loss;
    rec["pairs"] = s.pairs;
    rec["pseudo_pairs"] = s.pseudo_pairs;
    out << rec.dump() << '\n';
  }
}

}  // namespace termset
