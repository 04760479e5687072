#include "termset/run_format.hpp"

#include <fmt/format.h>

#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "termset/error.hpp"

namespace termset {

void write_run(std::ostream& out, const std::vector<SearchResult>& results, std::string_view tag) {
  if (tag.empty() || tag.find_first_of(" \t\n") != std::string_view::npos) {
    throw UsageError("run tag must be a single non-empty word");
  }
  for (const SearchResult& r : results) {
    for (std::size_t i = 0; i < r.ranking.size(); ++i) {
      out << fmt::format("{} Q0 {} {} {} {}\n", r.query_id, r.ranking[i].doc_id, i + 1,
                         r.ranking[i].score, tag);
    }
  }
}

std::vector<RunLine> read_run(std::istream& in) {
  std::vector<RunLine> lines;
  std::set<std::pair<std::string, std::string>> seen;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream fields(text);
    RunLine line;
    std::string q0, rank, score, extra;
    if (!(fields >> line.query_id >> q0 >> line.doc_id >> rank >> score >> line.tag) ||
        (fields >> extra)) {
      throw DataError(fmt::format("run line {}: expected 6 fields", number));
    }
    try {
      std::size_t used = 0;
      const long long r = std::stoll(rank, &used);
      if (used != rank.size() || r < 1) throw DataError("");
      line.rank = static_cast<std::size_t>(r);
      line.score = std::stod(score, &used);
      if (used != score.size()) throw DataError("");
    } catch (const std::exception&) {
      throw DataError(fmt::format("run line {}: bad rank or score", number));
    }
    if (!seen.emplace(line.query_id, line.doc_id).second) {
      throw DataError(
          fmt::format("run line {}: duplicate pair ({}, {})", number, line.query_id, line.doc_id));
    }
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace termset
