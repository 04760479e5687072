#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "termset/index.hpp"
#include "termset/scorer.hpp"
#include "termset/synthetic.hpp"

namespace termset::fixtures {

// The floor keeps coordinates whose true gradient is exactly zero (position
// and bias cancel inside a softmax) from turning rounding noise into error.
inline constexpr double kGradientScaleFloor = 1e-3;

inline double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), kGradientScaleFloor});
  return std::abs(analytic - numeric) / scale;
}

// Largest per-coordinate relative error between `gradient` and central
// differences of `f` around `x`.
template <typename Vec>
double max_gradient_error(const std::function<double(const Vec&)>& f, const Vec& x,
                          const Vec& gradient, double step = 1e-5) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vec hi = x, lo = x;
    hi[i] += step;
    lo[i] -= step;
    const double numeric = (f(hi) - f(lo)) / (2.0 * step);
    worst = std::max(worst, relative_error(gradient[i], numeric));
  }
  return worst;
}

inline StepFeatures random_step_weights(std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  StepFeatures w{};
  for (double& v : w) v = normal(rng);
  return w;
}

// Every term gets a random prior in [0, 2).
inline std::unordered_map<std::string, double> random_priors(const Index& index,
                                                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uniform(0.0, 2.0);
  std::unordered_map<std::string, double> priors;
  for (const auto& term : index.dictionary().terms()) priors[term] = uniform(rng);
  return priors;
}

inline FeatureScorer random_scorer(const Index& index, std::mt19937_64& rng) {
  const auto priors = random_priors(index, rng);
  return FeatureScorer(index, priors, random_step_weights(rng));
}

// A query of `length` dictionary terms, one of which may be shortened so it
// matches only by prefix.
inline QueryContext random_query(const Index& index, std::size_t length, std::mt19937_64& rng,
                                 const std::string& id = "q") {
  std::uniform_int_distribution<std::size_t> pick(0, index.dictionary().size() - 1);
  std::vector<std::string> terms;
  for (std::size_t i = 0; i < length; ++i) {
    std::string term = index.dictionary().term(static_cast<TermId>(pick(rng)));
    if (i == 0 && term.size() > 5) term.pop_back();
    terms.push_back(std::move(term));
  }
  return make_query_context(id, terms, index.dictionary());
}

}  // namespace termset::fixtures
