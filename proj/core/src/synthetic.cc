#include "termset/synthetic.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <unordered_set>

#include "termset/error.hpp"
#include "termset/text.hpp"

namespace termset {
namespace {

// k distinct indices from [0, n), in draw order.
std::vector<std::size_t> draw_distinct(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  if (k > n) throw UsageError(fmt::format("cannot draw {} distinct items from {}", k, n));
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return pool;
}

std::string join_words(const std::vector<std::string>& words) {
  return fmt::format("{}", fmt::join(words, " "));
}

}  // namespace

std::vector<std::string> random_words(std::size_t count, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> length(5, 8);
  std::uniform_int_distribution<int> letter(0, 25);
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  out.reserve(count);
  while (out.size() < count) {
    std::string w(static_cast<std::size_t>(length(rng)), 'a');
    for (char& c : w) c = static_cast<char>('a' + letter(rng));
    if (is_stopword(w) || !seen.insert(w).second) continue;
    out.push_back(std::move(w));
  }
  return out;
}

IdentifierSpec random_registry(std::size_t docs, std::size_t vocab, std::size_t n,
                               std::uint64_t seed) {
  if (n == 0 || n > vocab) throw UsageError("random_registry needs 1 <= n <= vocab");
  std::mt19937_64 rng(seed);
  IdentifierSpec spec;
  spec.n = n;
  std::set<std::vector<std::size_t>> sets;
  std::size_t attempts = 0;
  while (spec.identifiers.size() < docs) {
    if (++attempts > docs * 100 + 1000) throw UsageError("vocabulary too small for distinct sets");
    auto draw = draw_distinct(vocab, n, rng);
    auto key = draw;
    std::sort(key.begin(), key.end());
    if (!sets.insert(key).second) continue;
    Identifier id;
    id.doc_id = fmt::format("d{}", spec.identifiers.size());
    for (std::size_t t : draw) id.terms.push_back(fmt::format("w{:05}", t));
    spec.identifiers.push_back(std::move(id));
  }
  return spec;
}

SyntheticDataset bridging_corpus(const BridgingOptions& o) {
  std::mt19937_64 rng(o.seed);
  const auto bridges = random_words(o.docs, rng);
  auto pool = random_words(o.fillers + o.distractors, rng);
  std::unordered_set<std::string> taken(bridges.begin(), bridges.end());
  // Regenerate pool words that collide with a bridge.
  for (auto& w : pool) {
    while (taken.count(w) > 0) w = random_words(1, rng).front();
    taken.insert(w);
  }
  const std::vector<std::string> fillers(pool.begin(),
                                         pool.begin() + static_cast<std::ptrdiff_t>(o.fillers));
  const std::vector<std::string> distractors(pool.begin() + static_cast<std::ptrdiff_t>(o.fillers),
                                             pool.end());

  SyntheticDataset ds;
  std::vector<Document> docs;
  std::vector<std::vector<std::string>> doc_fillers(o.docs);
  for (std::size_t d = 0; d < o.docs; ++d) {
    for (std::size_t i : draw_distinct(fillers.size(), o.fillers_per_doc, rng)) {
      doc_fillers[d].push_back(fillers[i]);
    }
    std::vector<std::string> body{bridges[d]};
    body.insert(body.end(), doc_fillers[d].begin(), doc_fillers[d].end());
    for (std::size_t i : draw_distinct(distractors.size(), o.distractors_per_doc, rng)) {
      body.push_back(distractors[i]);
    }
    std::shuffle(body.begin(), body.end(), rng);
    const std::string title = bridges[d] + " " + doc_fillers[d].front();
    docs.push_back(make_document(fmt::format("d{}", d), title, join_words(body)));
    ds.bridging_terms.insert(bridges[d]);
  }
  ds.corpus = Corpus::from_documents(std::move(docs));

  auto make = [&](std::size_t d, const std::string& id) {
    std::vector<std::string> words{bridges[d]};
    for (std::size_t i : draw_distinct(doc_fillers[d].size(), 2, rng)) {
      words.push_back(doc_fillers[d][i]);
    }
    std::uniform_int_distribution<std::size_t> any(0, fillers.size() - 1);
    words.push_back(fillers[any(rng)]);
    std::shuffle(words.begin(), words.end(), rng);
    return make_query(id, join_words(words));
  };
  for (std::size_t d = 0; d < o.docs; ++d) {
    for (std::size_t k = 0; k < o.train_queries_per_doc; ++k) {
      const std::string id = fmt::format("tr{}-{}", d, k);
      ds.train_queries.push_back(make(d, id));
      ds.train_judgments.add(id, fmt::format("d{}", d), 1);
    }
    for (std::size_t k = 0; k < o.test_queries_per_doc; ++k) {
      const std::string id = fmt::format("te{}-{}", d, k);
      ds.test_queries.push_back(make(d, id));
      ds.test_judgments.add(id, fmt::format("d{}", d), 1);
    }
  }
  return ds;
}

SyntheticDataset order_noise_corpus(const OrderNoiseOptions& o) {
  if (o.query_terms == 0 || o.query_terms > o.terms_per_doc) {
    throw UsageError("order-noise corpus needs 1 <= query_terms <= terms_per_doc");
  }
  std::mt19937_64 rng(o.seed);
  const auto vocab = random_words(o.vocab, rng);

  SyntheticDataset ds;
  std::vector<Document> docs;
  std::vector<std::vector<std::string>> doc_terms;
  std::set<std::vector<std::size_t>> sets;
  std::uniform_int_distribution<int> repeats(1, 3);
  while (docs.size() < o.docs) {
    auto draw = draw_distinct(vocab.size(), o.terms_per_doc, rng);
    auto key = draw;
    std::sort(key.begin(), key.end());
    if (!sets.insert(key).second) continue;
    std::vector<std::string> terms;
    for (std::size_t t : draw) terms.push_back(vocab[t]);
    std::vector<std::string> body;
    for (const auto& t : terms) body.insert(body.end(), static_cast<std::size_t>(repeats(rng)), t);
    std::shuffle(body.begin(), body.end(), rng);
    docs.push_back(make_document(fmt::format("d{}", docs.size()), terms.front(), join_words(body)));
    doc_terms.push_back(std::move(terms));
  }
  ds.corpus = Corpus::from_documents(std::move(docs));

  auto make = [&](std::size_t d, const std::string& id) {
    std::vector<std::string> words;
    for (std::size_t i : draw_distinct(doc_terms[d].size(), o.query_terms, rng)) {
      words.push_back(doc_terms[d][i]);
    }
    return make_query(id, join_words(words));
  };
  for (std::size_t d = 0; d < o.docs; ++d) {
    for (std::size_t k = 0; k < o.train_queries_per_doc; ++k) {
      const std::string id = fmt::format("tr{}-{}", d, k);
      ds.train_queries.push_back(make(d, id));
      ds.train_judgments.add(id, fmt::format("d{}", d), 1);
    }
    for (std::size_t k = 0; k < o.test_queries_per_doc; ++k) {
      const std::string id = fmt::format("te{}-{}", d, k);
      ds.test_queries.push_back(make(d, id));
      ds.test_judgments.add(id, fmt::format("d{}", d), 1);
    }
  }
  return ds;
}

}  // namespace termset
