#include "termset/text.hpp"

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

using termset::tokenize;
using Terms = std::vector<std::string>;

TEST(Tokenize, LowercasesAndStripsPunctuation) {
  EXPECT_EQ(tokenize("Who cooks for the President?"),
            (Terms{"who", "cooks", "for", "the", "president"}));
}

TEST(Tokenize, EmptyInput) { EXPECT_TRUE(tokenize("").empty()); }

TEST(Tokenize, DashIsPunctuation) {
  EXPECT_EQ(tokenize("Cristeta Comerford \xE2\x80\x94 Executive Chef"),
            (Terms{"cristeta", "comerford", "executive", "chef"}));
}

TEST(Tokenize, KeepsDigitsAndNonAsciiLetters) {
  EXPECT_EQ(tokenize("G20 Summit, 2009"), (Terms{"g20", "summit", "2009"}));
  EXPECT_EQ(tokenize("Cr\xC3\xA8me BR\xC3\x9BL\xC3\x89"
                     "E"),
            (Terms{"cr\xC3\xA8me",
                   "br\xC3\xBBl\xC3\xA9"
                   "e"}));
  EXPECT_EQ(tokenize("\xCE\x91\xCE\x98\xCE\x97\xCE\x9D\xCE\x91"),
            (Terms{"\xCE\xB1\xCE\xB8\xCE\xB7\xCE\xBD\xCE\xB1"}));
}

TEST(Tokenize, InvalidUtf8Separates) {
  EXPECT_EQ(tokenize("ab\xFF"
                     "cd"),
            (Terms{"ab", "cd"}));
  EXPECT_EQ(tokenize("ab\xC3"), (Terms{"ab"}));
}

TEST(Tokenize, Stopwords) {
  termset::TokenizerOptions opts;
  opts.drop_stopwords = true;
  EXPECT_EQ(tokenize("Who cooks for the President", opts), (Terms{"cooks", "president"}));
  EXPECT_TRUE(termset::is_stopword("the"));
  EXPECT_FALSE(termset::is_stopword("chef"));
}

TEST(Tokenize, IdempotentOnRandomText) {
  std::mt19937_64 rng(5);
  const std::string alphabet = "abcXYZ019 .,-!?\t\n\xC3\xA9\xE2\x80\x94";
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    for (int i = 0; i < 40; ++i) text += alphabet[pick(rng)];
    const Terms once = tokenize(text);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    EXPECT_EQ(tokenize(joined), once) << text;
  }
}

TEST(Codepoints, CountAndPrefix) {
  EXPECT_EQ(termset::codepoint_count("cr\xC3\xA8me"), 5u);
  EXPECT_EQ(termset::codepoint_prefix("cr\xC3\xA8me", 3), "cr\xC3\xA8");
  EXPECT_EQ(termset::codepoint_prefix("ab", 4), "ab");
}
