#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "termset/decoder.hpp"
#include "termset/scorer.hpp"
#include "termset/synthetic.hpp"

using namespace termset;

namespace {

struct Fixture {
  Index index;
  FeatureScorer scorer;
  std::vector<QueryContext> queries;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out{Index::build(random_registry(20000, 30000, 8, 3)), {}, {}};
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> prior(0.0, 2.0);
    std::unordered_map<std::string, double> priors;
    for (const auto& t : out.index.dictionary().terms()) priors[t] = prior(rng);
    out.scorer = FeatureScorer(out.index, priors, {2.0, 0.5, 0.8, -0.3, 0.0, 0.0});
    for (int q = 0; q < 64; ++q) {
      const auto& doc = out.index.doc(static_cast<DocIndex>(rng() % out.index.doc_count()));
      std::vector<std::string> terms;
      for (std::size_t k = 0; k < 3; ++k)
        terms.push_back(out.index.dictionary().term(doc.ordered[k]));
      out.queries.push_back(
          make_query_context("q" + std::to_string(q), terms, out.index.dictionary()));
    }
    return out;
  }();
  return f;
}

void BM_BeamSearch(benchmark::State& state) {
  const Fixture& f = fixture();
  DecoderOptions opts;
  opts.beam = static_cast<std::size_t>(state.range(0));
  opts.form = state.range(1) ? IdentifierForm::kSequence : IdentifierForm::kTermSet;
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(search(f.queries[i++ % f.queries.size()], f.index, f.scorer, opts));
  }
  state.SetLabel(state.range(1) ? "sequence" : "termset");
}

}  // namespace

BENCHMARK(BM_BeamSearch)->ArgsProduct({{1, 10, 100}, {0, 1}})->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
