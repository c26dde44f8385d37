#include <gtest/gtest.h>

#include <random>

#include "checkworthy/sentiment.hpp"
#include "support/temp_dir.hpp"

using namespace checkworthy;

namespace {

SentimentLexicon small_lexicon() {
  return parse_lexicon("good\t2\nbad\t-3\nmeh\t0\n", "test");
}

}  // namespace

TEST(Sentiment, EmptySentenceIsNeutral) {
  auto s = score_sentence({}, small_lexicon());
  EXPECT_EQ(s.neg, 0.0);
  EXPECT_EQ(s.neu, 1.0);
  EXPECT_EQ(s.pos, 0.0);
}

TEST(Sentiment, MixedSentence) {
  // P = 2, N = 3, U = 2 (meh, and)
  auto s = score_sentence({"good", "bad", "meh", "and"}, small_lexicon());
  EXPECT_DOUBLE_EQ(s.pos, 2.0 / 7.0);
  EXPECT_DOUBLE_EQ(s.neg, 3.0 / 7.0);
  EXPECT_DOUBLE_EQ(s.neu, 2.0 / 7.0);
}

TEST(Sentiment, AllOutOfLexiconIsNeutral) {
  auto s = score_sentence({"tax", "plan"}, small_lexicon());
  EXPECT_EQ(s.neu, 1.0);
  EXPECT_EQ(s.pos + s.neg, 0.0);
}

TEST(Sentiment, SumsToOneAndNegationSwaps) {
  std::mt19937 rng(12);
  SentimentLexicon lex, flipped;
  std::vector<std::string> words;
  for (int i = 0; i < 30; ++i) {
    const std::string w = "w" + std::to_string(i);
    words.push_back(w);
    if (i < 20) {
      const double v = std::round((static_cast<double>(rng() % 801) / 100.0 - 4.0) * 100.0) / 100.0;
      lex.entries[w] = v;
      flipped.entries[w] = -v;
    }
  }
  for (int trial = 0; trial < 500; ++trial) {
    TokenList toks;
    const int n = static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) toks.push_back(words[rng() % words.size()]);
    auto a = score_sentence(toks, lex);
    auto b = score_sentence(toks, flipped);
    EXPECT_NEAR(a.neg + a.neu + a.pos, 1.0, 1e-12);
    EXPECT_GE(a.neg, 0.0);
    EXPECT_GE(a.pos, 0.0);
    EXPECT_EQ(a.pos, b.neg);
    EXPECT_EQ(a.neg, b.pos);
    EXPECT_EQ(a.neu, b.neu);
  }
}

TEST(Lexicon, ParsesCommentsAndNormalizesWords) {
  auto lex = parse_lexicon("# c\n\nGood\t1.5\ncan't\t-1\n", "x");
  ASSERT_NE(lex.find("good"), nullptr);
  EXPECT_EQ(*lex.find("good"), 1.5);
  ASSERT_NE(lex.find("cant"), nullptr);
}

TEST(Lexicon, RejectsBadRowsWithLineNumber) {
  try {
    parse_lexicon("good\t1\nbad\tworse\n", "lex.tsv");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.file(), "lex.tsv");
  }
  EXPECT_THROW(parse_lexicon("good\t4.5\n", "x"), ParseError);
  EXPECT_THROW(parse_lexicon("good\n", "x"), ParseError);
  EXPECT_THROW(parse_lexicon("two words\t1\n", "x"), ParseError);
}

TEST(Lexicon, BuiltinMatchesResourceFile) {
  auto file = load_lexicon(std::string(CHECKWORTHY_RESOURCE_DIR) + "/sentiment_demo.tsv");
  EXPECT_EQ(file, default_lexicon());
  EXPECT_GE(file.entries.size(), 50u);
  EXPECT_THROW(load_lexicon("/nonexistent/lexicon.tsv"), ParseError);
}
