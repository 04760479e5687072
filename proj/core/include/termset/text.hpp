#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace termset {

struct TokenizerOptions {
  // A small English stopword list. Off by default: importance learning is
  // expected to demote function words on its own.
  bool drop_stopwords = false;
};

// Splits text into lowercase terms. Any character that is not a letter or a
// digit separates terms; empty tokens are dropped and order is preserved.
//
// Input is decoded as UTF-8. Invalid byte sequences act as separators.
// Lowercasing covers ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic;
// other letters pass through unchanged.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options = {});

bool is_stopword(std::string_view term);

// Number of Unicode code points in a UTF-8 string.
std::size_t codepoint_count(std::string_view text);

// The first `count` code points of `text` (the whole string if shorter).
std::string_view codepoint_prefix(std::string_view text, std::size_t count);

}  // namespace termset
