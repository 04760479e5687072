#include "termset/identifier.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>
#include <string>

#include "termset/error.hpp"

using namespace termset;
using Terms = std::vector<std::string>;

namespace {

TermWeights weights(std::initializer_list<std::pair<const char*, double>> list) {
  TermWeights out;
  std::size_t pos = 0;
  for (const auto& [t, w] : list) out.push_back({t, w, pos++});
  return out;
}

std::set<std::string> as_set(const Terms& t) { return {t.begin(), t.end()}; }

}  // namespace

TEST(SelectIdentifier, TopByWeight) {
  const auto w =
      weights({{"the", 0.05}, {"white", 0.7}, {"house", 0.6}, {"executive", 0.9}, {"chef", 0.8}});
  EXPECT_EQ(select_identifier(w, 4, "D"), (Terms{"executive", "chef", "white", "house"}));
  EXPECT_EQ(select_identifier(w, 5, "D"), (Terms{"executive", "chef", "white", "house", "the"}));
}

TEST(SelectIdentifier, TiesByPositionThenLexicographic) {
  TermWeights w{{"b", 0.5, 0}, {"a", 0.5, 1}, {"d", 0.5, 2}, {"c", 0.5, 2}};
  EXPECT_EQ(rank_terms(w), (Terms{"b", "a", "c", "d"}));
}

TEST(SelectIdentifier, PadsWithPlaceholders) {
  const auto w = weights({{"t1", 0.9}, {"t2", 0.1}});
  const Terms id = select_identifier(w, 4, "D");
  EXPECT_EQ(id, (Terms{"t1", "t2", placeholder_term("D", 0), placeholder_term("D", 1)}));
  EXPECT_TRUE(is_placeholder(id[2]));
  EXPECT_FALSE(is_placeholder("t1"));
}

TEST(ResolveCollisions, ReplacesLowestTerm) {
  std::vector<RankedTerms> docs{{"A", {"t1", "t2", "x"}}, {"B", {"t1", "t2", "y"}}};
  const IdentifierSpec spec = resolve_collisions(docs, 2);
  ASSERT_EQ(spec.identifiers.size(), 2u);
  EXPECT_EQ(spec.identifiers[0].terms, (Terms{"t1", "t2"}));
  EXPECT_EQ(spec.identifiers[1].terms, (Terms{"t1", "y"}));
  EXPECT_EQ(spec.collision_placeholders, 0u);
  validate_identifiers(spec);
}

TEST(ResolveCollisions, FixedPointWithoutCollisions) {
  std::vector<RankedTerms> docs{{"A", {"a", "b", "c"}}, {"B", {"b", "c", "d"}}};
  const IdentifierSpec spec = resolve_collisions(docs, 2);
  EXPECT_EQ(spec.identifiers[0].terms, (Terms{"a", "b"}));
  EXPECT_EQ(spec.identifiers[1].terms, (Terms{"b", "c"}));
}

TEST(ResolveCollisions, IdenticalDocumentsGetOnePlaceholder) {
  std::vector<RankedTerms> docs{{"A", {"a", "b"}}, {"B", {"a", "b"}}};
  const IdentifierSpec spec = resolve_collisions(docs, 2);
  EXPECT_EQ(spec.collision_placeholders, 1u);
  EXPECT_EQ(spec.identifiers[0].terms, (Terms{"a", "b"}));
  EXPECT_EQ(spec.identifiers[1].terms, (Terms{"a", placeholder_term("B", 0)}));
  validate_identifiers(spec);
}

TEST(ResolveCollisions, UniqueOnRandomRankings) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> term(0, 7), len(1, 6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<RankedTerms> docs;
    for (int d = 0; d < 30; ++d) {
      Terms ranked;
      std::set<int> used;
      const int n = len(rng);
      while (static_cast<int>(used.size()) < n) {
        const int t = term(rng);
        if (used.insert(t).second) ranked.push_back("t" + std::to_string(t));
      }
      docs.push_back({"d" + std::to_string(d), ranked});
    }
    const IdentifierSpec spec = resolve_collisions(docs, 3);
    validate_identifiers(spec);
    std::set<std::set<std::string>> sets;
    for (const auto& id : spec.identifiers) sets.insert(as_set(id.terms));
    EXPECT_EQ(sets.size(), docs.size());
  }
}

TEST(ChooseLength, SmallestWithoutPlaceholders) {
  // At n=1 B has no term outside A's ranking; at n=2 the sets already differ.
  std::vector<RankedTerms> docs{{"A", {"a", "c", "b"}}, {"B", {"a", "b"}}};
  const IdentifierScan scan = choose_identifier_length(docs, 1, 3);
  EXPECT_EQ(scan.spec.n, 2u);
  ASSERT_GE(scan.tried.size(), 2u);
  EXPECT_GT(scan.tried[0].second, 0u);
  EXPECT_EQ(scan.tried.back().second, 0u);
}

TEST(Identifiers, FileRoundTripAndValidation) {
  IdentifierSpec spec;
  spec.n = 2;
  spec.identifiers = {{"A", {"chef", "white"}}, {"B", {"pastry", "chef"}}};
  std::stringstream s;
  write_identifiers(s, spec);
  EXPECT_EQ(s.str(), "A\tchef,white\nB\tpastry,chef\n");
  const IdentifierSpec back = read_identifiers(s);
  EXPECT_EQ(back.n, 2u);
  EXPECT_EQ(back.identifiers[1].terms, spec.identifiers[1].terms);

  IdentifierSpec dup = spec;
  dup.identifiers[1].terms = {"white", "chef"};
  EXPECT_THROW(validate_identifiers(dup), DataError);
  IdentifierSpec ragged = spec;
  ragged.identifiers[1].terms = {"pastry"};
  EXPECT_THROW(validate_identifiers(ragged), DataError);
  IdentifierSpec repeated = spec;
  repeated.identifiers[1].terms = {"pastry", "pastry"};
  EXPECT_THROW(validate_identifiers(repeated), DataError);
}
