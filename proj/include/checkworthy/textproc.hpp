#pragma once

// Tokenization, stoplists, bigrams, and discriminative bigram selection.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "checkworthy/binary_io.hpp"
#include "checkworthy/corpus.hpp"
#include "checkworthy/error.hpp"

namespace checkworthy {

using TokenList = std::vector<std::string>;
using Bigram = std::pair<std::string, std::string>;

namespace utf8 {

/// Decodes one code point starting at `pos` and advances past it. Invalid
/// sequences decode to U+FFFD and consume one byte.
inline char32_t next(std::string_view s, std::size_t& pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  auto cont = [&](std::size_t i) -> int {
    if (pos + i >= s.size()) return -1;
    auto b = static_cast<unsigned char>(s[pos + i]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++pos;
    return b0;
  }
  int len = (b0 & 0xE0) == 0xC0 ? 2 : (b0 & 0xF0) == 0xE0 ? 3 : (b0 & 0xF8) == 0xF0 ? 4 : 0;
  if (len == 0) {
    ++pos;
    return 0xFFFD;
  }
  char32_t cp = b0 & (0x7F >> len);
  for (int i = 1; i < len; ++i) {
    int c = cont(static_cast<std::size_t>(i));
    if (c < 0) {
      ++pos;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  pos += static_cast<std::size_t>(len);
  return cp;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// Coverage is the Latin, Greek, Cyrillic, Hebrew, Arabic, Devanagari and
// CJK/Hangul blocks plus common decimal digits; other scripts count as
// separators.
inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9');
  }
  if (cp == 0xAA || cp == 0xB5 || cp == 0xBA) return true;
  if (cp >= 0xC0 && cp <= 0x24F) return cp != 0xD7 && cp != 0xF7;
  if (cp >= 0x370 && cp <= 0x3FF) return cp != 0x37E && cp != 0x387 && cp != 0x375;
  if (cp >= 0x400 && cp <= 0x52F) return !(cp >= 0x482 && cp <= 0x489);
  if (cp >= 0x5D0 && cp <= 0x5EA) return true;
  if (cp >= 0x620 && cp <= 0x64A) return true;
  if (cp >= 0x660 && cp <= 0x669) return true;
  if (cp >= 0x904 && cp <= 0x939) return true;
  if (cp >= 0x966 && cp <= 0x96F) return true;
  if (cp >= 0x1E00 && cp <= 0x1FFF) return true;
  if (cp >= 0x3040 && cp <= 0x30FF) return cp != 0x30FB;
  if (cp >= 0x4E00 && cp <= 0x9FFF) return true;
  if (cp >= 0xAC00 && cp <= 0xD7A3) return true;
  if (cp >= 0xFF10 && cp <= 0xFF19) return true;
  return false;
}

inline bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019 || cp == 0x2018; }

inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  if (cp < 0x80) return cp;
  if ((cp >= 0xC0 && cp <= 0xDE) && cp != 0xD7) return cp + 32;
  if (cp >= 0x100 && cp <= 0x17F) {
    // Latin Extended-A alternates upper/lower, with a parity shift in 0x139-0x148 and 0x179-0x17E.
    bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
    if (cp == 0x130 || cp == 0x131 || cp == 0x138 || cp == 0x149 || cp == 0x17F) return cp;
    if (cp == 0x178) return 0xFF;
    return odd_upper ? ((cp & 1) ? cp + 1 : cp) : ((cp & 1) ? cp : cp + 1);
  }
  if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
  if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
  return cp;
}

}  // namespace utf8

/// A set of words removed before topic modeling.
class Stoplist {
 public:
  Stoplist() = default;
  explicit Stoplist(std::unordered_set<std::string> words) : words_(std::move(words)) {}

  bool contains(const std::string& w) const { return words_.count(w) != 0; }
  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }

  /// Words are normalized the way tokens are, so "Don't" in the file
  /// matches the token "dont".
  void add(std::string_view word);

 private:
  std::unordered_set<std::string> words_;
};

/// Lowercased maximal runs of letters/digits. Apostrophes are skipped without
/// splitting a word, everything else separates tokens.
inline TokenList tokenize(std::string_view text, const Stoplist* stoplist = nullptr) {
  TokenList tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.empty()) return;
    if (!stoplist || !stoplist->contains(cur)) tokens.push_back(cur);
    cur.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = utf8::next(text, pos);
    if (utf8::is_word_char(cp)) {
      utf8::append(cur, utf8::to_lower(cp));
    } else if (!utf8::is_apostrophe(cp)) {
      flush();
    }
  }
  flush();
  return tokens;
}

inline TokenList tokenize(std::string_view text, bool drop_stopwords, const Stoplist& stoplist) {
  return tokenize(text, drop_stopwords ? &stoplist : nullptr);
}

inline void Stoplist::add(std::string_view word) {
  for (auto& t : tokenize(word)) words_.insert(std::move(t));
}

inline std::string join_tokens(const TokenList& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

inline Stoplist parse_stoplist(std::string_view contents) {
  Stoplist sl;
  for (auto line : detail::split_lines(contents)) {
    auto hash = line.find('#');
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (!line.empty()) sl.add(line);
  }
  return sl;
}

inline Stoplist load_stoplist(const std::filesystem::path& path) {
  return parse_stoplist(io::read_file(path.string()));
}

/// Built-in English function-word list, identical to resources/stopwords.txt.
inline const Stoplist& default_stoplist() {
  static const Stoplist sl = [] {
    static constexpr std::string_view words[] = {
        "a", "about", "above", "after", "again", "against", "all", "am", "an", "and",
        "any", "are", "as", "at", "be", "because", "been", "before", "being", "below",
        "between", "both", "but", "by", "can", "could", "did", "do", "does", "doing",
        "down", "during", "each", "few", "for", "from", "further", "had", "has", "have",
        "having", "he", "her", "here", "hers", "herself", "him", "himself", "his", "how",
        "i", "if", "in", "into", "is", "it", "its", "itself", "just", "me",
        "more", "most", "my", "myself", "no", "nor", "not", "now", "of", "off",
        "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over",
        "own", "same", "she", "should", "so", "some", "such", "than", "that", "the",
        "their", "theirs", "them", "themselves", "then", "there", "these", "they", "this", "those",
        "through", "to", "too", "under", "until", "up", "very", "was", "we", "were",
        "what", "when", "where", "which", "while", "who", "whom", "why", "will", "with",
        "would", "you", "your", "yours", "yourself", "yourselves", "dont", "didnt", "doesnt", "isnt",
        "wasnt", "arent", "werent", "cant", "wont", "im", "ive", "youre", "weve", "theyre",
        "thats", "lets", "also", "well", "yes", "oh", "okay", "ok", "let", "get",
        "got", "go", "going", "said", "say", "one", "us",
    };
    Stoplist s;
    for (auto w : words) s.add(w);
    return s;
  }();
  return sl;
}

inline std::vector<Bigram> extract_bigrams(const TokenList& tokens) {
  std::vector<Bigram> out;
  if (tokens.size() < 2) return out;
  out.reserve(tokens.size() - 1);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) out.emplace_back(tokens[i], tokens[i + 1]);
  return out;
}

enum class BigramSide : std::uint8_t { checkworthy_only = 1, non_checkworthy_only = 0 };

/// Bigrams that occur often, and only, in one label class.
struct BigramSet {
  std::map<Bigram, BigramSide> bigrams;
  int threshold = 50;

  bool operator==(const BigramSet&) const = default;

  std::size_t size() const noexcept { return bigrams.size(); }

  struct Hits {
    int checkworthy = 0;
    int non_checkworthy = 0;
    int total() const { return checkworthy + non_checkworthy; }
  };

  /// Counts occurrences of selected bigrams in a raw token list.
  Hits count_hits(const TokenList& tokens) const {
    Hits h;
    if (bigrams.empty()) return h;
    for (const auto& bg : extract_bigrams(tokens)) {
      auto it = bigrams.find(bg);
      if (it == bigrams.end()) continue;
      (it->second == BigramSide::checkworthy_only ? h.checkworthy : h.non_checkworthy) += 1;
    }
    return h;
  }
};

/// Per-class bigram occurrence counts over raw lowercased tokens.
struct BigramCounts {
  std::map<Bigram, std::size_t> positive;
  std::map<Bigram, std::size_t> negative;
};

inline BigramCounts count_bigrams_by_class(const std::vector<Debate>& corpus) {
  BigramCounts counts;
  for (const auto& d : corpus) {
    for (const auto& r : d.records) {
      if (!r.label) {
        throw ContractError("bigram selection needs a labeled corpus; " + d.debate_id + ":" +
                            std::to_string(r.line_number) + " has no label");
      }
      auto& side = *r.label == 1 ? counts.positive : counts.negative;
      for (auto& bg : extract_bigrams(tokenize(r.text))) ++side[std::move(bg)];
    }
  }
  return counts;
}

inline BigramSet select_discriminative_bigrams(const std::vector<Debate>& corpus, int threshold = 50) {
  if (threshold < 1) throw ConfigError("bigram threshold must be a positive integer");
  auto counts = count_bigrams_by_class(corpus);
  BigramSet set;
  set.threshold = threshold;
  auto take = [&](const std::map<Bigram, std::size_t>& mine, const std::map<Bigram, std::size_t>& other,
                  BigramSide side) {
    for (const auto& [bg, n] : mine) {
      if (n >= static_cast<std::size_t>(threshold) && !other.count(bg)) set.bigrams.emplace(bg, side);
    }
  };
  take(counts.positive, counts.negative, BigramSide::checkworthy_only);
  take(counts.negative, counts.positive, BigramSide::non_checkworthy_only);
  return set;
}

}  // namespace checkworthy
