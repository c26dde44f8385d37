#pragma once

// Lexicon-proportion sentiment: the negative, neutral and positive shares of
// a sentence's valence mass.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "checkworthy/binary_io.hpp"
#include "checkworthy/corpus.hpp"
#include "checkworthy/error.hpp"
#include "checkworthy/textproc.hpp"

namespace checkworthy {

inline constexpr double kMaxValence = 4.0;

struct SentimentLexicon {
  std::map<std::string, double> entries;

  bool operator==(const SentimentLexicon&) const = default;

  const double* find(const std::string& word) const {
    auto it = entries.find(word);
    return it == entries.end() ? nullptr : &it->second;
  }
};

struct SentimentScores {
  double neg = 0.0;
  double neu = 1.0;
  double pos = 0.0;
};

/// Parses `word \t valence` rows. Blank lines and '#' comment lines are
/// skipped; a repeated word keeps its last valence.
inline SentimentLexicon parse_lexicon(std::string_view contents, const std::string& source) {
  SentimentLexicon lex;
  auto lines = detail::split_lines(contents);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto line = detail::trim(lines[i]);
    if (line.empty() || line.front() == '#') continue;
    auto fields = detail::split_tabs(line);
    if (fields.size() != 2) throw ParseError(source, i + 1, "expected 'word<TAB>valence'");
    auto word = tokenize(fields[0]);
    if (word.size() != 1) {
      throw ParseError(source, i + 1, "lexicon entry must be a single word: '" + std::string(fields[0]) + "'");
    }
    std::string num(detail::trim(fields[1]));
    char* end = nullptr;
    double v = std::strtod(num.c_str(), &end);
    if (num.empty() || end != num.c_str() + num.size() || !std::isfinite(v)) {
      throw ParseError(source, i + 1, "non-numeric valence '" + num + "'");
    }
    if (v < -kMaxValence || v > kMaxValence) {
      throw ParseError(source, i + 1, "valence " + num + " outside [-4, 4]");
    }
    lex.entries[word.front()] = v;
  }
  return lex;
}

inline SentimentLexicon load_lexicon(const std::filesystem::path& path) {
  std::string contents;
  try {
    contents = io::read_file(path.string());
  } catch (const Error&) {
    throw ParseError(path.string(), 0, "cannot read file");
  }
  return parse_lexicon(contents, path.string());
}

/// Built-in demo lexicon, identical to resources/sentiment_demo.tsv.
inline const SentimentLexicon& default_lexicon() {
  static const SentimentLexicon lex = parse_lexicon(R"tsv(# Demo valence lexicon: word<TAB>valence in [-4, 4].
good	1.9
great	3.1
wonderful	2.7
amazing	2.8
beautiful	2.9
best	3.2
better	1.9
love	3.2
happy	2.7
glad	2.0
proud	2.1
hope	1.9
strong	2.3
win	2.8
winning	2.4
success	2.7
safe	1.9
fair	1.3
honest	2.3
nice	1.8
respect	2.1
agree	1.5
support	1.7
welcome	2.0
thank	1.5
thanks	1.9
benefit	1.6
growth	1.6
improve	1.9
protect	1.6
bad	-2.5
terrible	-2.1
horrible	-2.5
worst	-3.1
worse	-2.1
hate	-2.7
angry	-2.3
sad	-2.1
afraid	-2.0
fear	-2.2
weak	-1.9
lose	-1.6
losing	-1.6
lost	-1.3
failure	-2.3
failed	-2.3
disaster	-3.1
crisis	-3.1
crime	-2.5
war	-2.9
kill	-3.7
killed	-3.5
dangerous	-2.1
wrong	-2.1
corrupt	-3.0
lie	-1.8
lies	-1.8
unfair	-2.1
problem	-1.7
debt	-1.5
)tsv",
                                                    "<builtin lexicon>");
  return lex;
}

/// Positive mass P, negative mass N and neutral count U give (N, U, P) / (N + U + P).
/// Out-of-lexicon and zero-valence tokens count one neutral unit each.
inline SentimentScores score_sentence(const TokenList& tokens, const SentimentLexicon& lexicon) {
  if (tokens.empty()) return {};
  double pos = 0.0, neg = 0.0, neu = 0.0;
  for (const auto& t : tokens) {
    const double* v = lexicon.find(t);
    if (!v || *v == 0.0) {
      neu += 1.0;
    } else if (*v > 0.0) {
      pos += *v;
    } else {
      neg += -*v;
    }
  }
  const double total = pos + neg + neu;
  return {neg / total, neu / total, pos / total};
}

}  // namespace checkworthy
