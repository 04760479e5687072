#pragma once

#include <string>
#include <vector>

#include "termset/identifier.hpp"
#include "termset/index.hpp"

namespace termset::fixtures {

// T(D1)={a,b,c}, T(D2)={a,b,d}, T(D3)={e,f,g}. Ids: a=0 ... g=6.
inline IdentifierSpec abc_spec() {
  IdentifierSpec spec;
  spec.n = 3;
  spec.identifiers = {{"D1", {"a", "b", "c"}}, {"D2", {"a", "b", "d"}}, {"D3", {"e", "f", "g"}}};
  return spec;
}

inline Index abc_index() { return Index::build(abc_spec()); }

inline std::vector<TermId> ids(const Index& index, const std::vector<std::string>& terms) {
  return index.term_ids(terms);
}

}  // namespace termset::fixtures
