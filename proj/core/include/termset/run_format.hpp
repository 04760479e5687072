#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "termset/decoder.hpp"

namespace termset {

// One "query_id Q0 doc_id rank score run_tag" line.
struct RunLine {
  std::string query_id;
  std::string doc_id;
  std::size_t rank = 0;
  double score = 0.0;
  std::string tag;
};

// Scores are printed with enough digits to round-trip exactly.
void write_run(std::ostream& out, const std::vector<SearchResult>& results, std::string_view tag);

// Throws DataError on malformed lines, ranks < 1 and duplicate
// (query_id, doc_id) pairs.
std::vector<RunLine> read_run(std::istream& in);

}  // namespace termset
