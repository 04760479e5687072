#include <benchmark/benchmark.h>

#include <algorithm>
#include <map>
#include <random>
#include <vector>

#include "termset/index.hpp"
#include "termset/synthetic.hpp"

using namespace termset;

namespace {

struct Fixture {
  Index index;
  std::vector<std::vector<TermId>> prefixes;
};

const Fixture& fixture(std::size_t docs) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(docs);
  if (it != cache.end()) return it->second;
  Fixture f{Index::build(random_registry(docs, docs * 2, 6, 1)), {}};
  std::mt19937_64 rng(2);
  for (int i = 0; i < 256; ++i) {
    auto p = f.index.doc(static_cast<DocIndex>(rng() % docs)).ordered;
    std::shuffle(p.begin(), p.end(), rng);
    p.resize(1 + rng() % 5);
    std::sort(p.begin(), p.end());
    f.prefixes.push_back(std::move(p));
  }
  return cache.emplace(docs, std::move(f)).first->second;
}

void BM_FeasiblePostings(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.index.feasible_terms(f.prefixes[i++ % f.prefixes.size()]));
  }
}

void BM_FeasibleScan(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(f.index.scan_feasible(f.prefixes[i++ % f.prefixes.size()]));
  }
}

void BM_Extend(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& p = f.prefixes[i++ % f.prefixes.size()];
    benchmark::DoNotOptimize(f.index.extend(f.index.root(), p.front()));
  }
}

}  // namespace

BENCHMARK(BM_FeasiblePostings)->Arg(1000)->Arg(10000)->Arg(100000);
BENCHMARK(BM_FeasibleScan)->Arg(1000)->Arg(10000)->Arg(100000);
BENCHMARK(BM_Extend)->Arg(1000)->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
