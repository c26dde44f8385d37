#pragma once

// Training-set expansion by swapping nouns and adjectives for their nearest
// neighbours in a word-vector store.

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "checkworthy/corpus.hpp"
#include "checkworthy/embeddings.hpp"
#include "checkworthy/error.hpp"
#include "checkworthy/textproc.hpp"

namespace checkworthy {

enum class PosTag { noun, adj, other };

inline std::string_view tag_name(PosTag t) {
  switch (t) {
    case PosTag::noun: return "NOUN";
    case PosTag::adj: return "ADJ";
    default: return "OTHER";
  }
}

/// Accepts the coarse tags and Penn Treebank tags (NN*, JJ*).
inline PosTag parse_tag(std::string_view s) {
  if (s == "NOUN" || s == "PROPN" || s.starts_with("NN")) return PosTag::noun;
  if (s == "ADJ" || s.starts_with("JJ")) return PosTag::adj;
  return PosTag::other;
}

struct PosTaggedSentence {
  TokenList tokens;
  std::vector<PosTag> tags;
};

class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual PosTaggedSentence tag(const SentenceRecord& record, const TokenList& tokens) const = 0;
};

/// Small closed-class lexicon plus suffix rules. Good enough for fixtures.
class FallbackTagger final : public Tagger {
 public:
  PosTaggedSentence tag(const SentenceRecord&, const TokenList& tokens) const override { return tag_tokens(tokens); }

  PosTaggedSentence tag_tokens(const TokenList& tokens) const {
    PosTaggedSentence out{tokens, {}};
    out.tags.reserve(tokens.size());
    for (const auto& t : tokens) out.tags.push_back(tag_word(t));
    return out;
  }

  static PosTag tag_word(const std::string& w) {
    static const std::map<std::string_view, PosTag> lexicon = {
        {"tax", PosTag::noun},     {"job", PosTag::noun},      {"war", PosTag::noun},     {"law", PosTag::noun},
        {"wall", PosTag::noun},    {"money", PosTag::noun},    {"people", PosTag::noun},  {"country", PosTag::noun},
        {"year", PosTag::noun},    {"state", PosTag::noun},    {"plan", PosTag::noun},    {"deal", PosTag::noun},
        {"border", PosTag::noun},  {"trade", PosTag::noun},    {"crime", PosTag::noun},   {"health", PosTag::noun},
        {"good", PosTag::adj},     {"bad", PosTag::adj},       {"great", PosTag::adj},    {"big", PosTag::adj},
        {"new", PosTag::adj},      {"high", PosTag::adj},      {"low", PosTag::adj},      {"strong", PosTag::adj},
        {"weak", PosTag::adj},     {"huge", PosTag::adj},      {"small", PosTag::adj},    {"american", PosTag::adj},
    };
    if (auto it = lexicon.find(w); it != lexicon.end()) return it->second;
    if (default_stoplist().contains(w)) return PosTag::other;
    if (std::all_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; })) return PosTag::other;

    struct Suffix {
      std::string_view text;
      std::size_t min_stem;
      PosTag tag;
    };
    static constexpr Suffix suffixes[] = {
        {"tion", 2, PosTag::noun}, {"sion", 2, PosTag::noun}, {"ment", 2, PosTag::noun}, {"ness", 2, PosTag::noun},
        {"ity", 2, PosTag::noun},  {"ance", 2, PosTag::noun}, {"ence", 2, PosTag::noun}, {"ship", 2, PosTag::noun},
        {"ous", 2, PosTag::adj},   {"ful", 2, PosTag::adj},   {"ive", 2, PosTag::adj},   {"able", 2, PosTag::adj},
        {"ible", 2, PosTag::adj},  {"ical", 2, PosTag::adj},  {"less", 2, PosTag::adj},  {"al", 3, PosTag::adj},
        {"es", 2, PosTag::noun},   {"ers", 2, PosTag::noun},
    };
    for (const auto& s : suffixes) {
      if (w.size() >= s.text.size() + s.min_stem && std::string_view(w).ends_with(s.text)) return s.tag;
    }
    return PosTag::other;
  }
};

/// Tags read from a sidecar file of `debate_id \t line_number \t tags` rows,
/// one space-separated tag per token.
class SidecarTagger final : public Tagger {
 public:
  static SidecarTagger parse(std::string_view contents, const std::string& source) {
    SidecarTagger t;
    auto lines = detail::split_lines(contents);
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (detail::trim(lines[i]).empty()) continue;
      auto f = detail::split_tabs(lines[i]);
      if (f.size() != 3) throw ParseError(source, i + 1, "expected 'debate_id<TAB>line_number<TAB>tags'");
      auto num = detail::parse_int(detail::trim(f[1]));
      if (!num || *num < 1) throw ParseError(source, i + 1, "bad line number");
      std::vector<PosTag> tags;
      std::size_t pos = 0;
      const auto text = f[2];
      while (pos < text.size()) {
        auto end = text.find(' ', pos);
        if (end == std::string_view::npos) end = text.size();
        if (end > pos) tags.push_back(parse_tag(text.substr(pos, end - pos)));
        pos = end + 1;
      }
      t.rows_[{std::string(f[0]), static_cast<int>(*num)}] = std::move(tags);
    }
    return t;
  }

  static SidecarTagger load(const std::filesystem::path& path) { return parse(io::read_file(path.string()), path.string()); }

  PosTaggedSentence tag(const SentenceRecord& record, const TokenList& tokens) const override {
    auto it = rows_.find({record.debate_id, record.line_number});
    if (it == rows_.end()) {
      throw MissingKeyError("no POS annotation for " + record.debate_id + ":" + std::to_string(record.line_number));
    }
    if (it->second.size() != tokens.size()) {
      throw MissingKeyError("POS annotation for " + record.debate_id + ":" + std::to_string(record.line_number) +
                            " has " + std::to_string(it->second.size()) + " tags for " +
                            std::to_string(tokens.size()) + " tokens");
    }
    return {tokens, it->second};
  }

 private:
  std::map<std::pair<std::string, int>, std::vector<PosTag>> rows_;
};

inline PosTaggedSentence tag_tokens(const SentenceRecord& record, const TokenList& tokens, const Tagger& tagger) {
  return tagger.tag(record, tokens);
}

/// Replaces every noun/adjective whose `rank`-th nearest neighbour (0 = the
/// closest) reaches `min_sim`. Empty when nothing was replaced.
inline std::optional<TokenList> augment_sentence(const PosTaggedSentence& s, const VectorStore& store, double min_sim,
                                                 std::size_t rank = 0) {
  if (s.tags.size() != s.tokens.size()) throw ContractError("tags and tokens differ in length");
  TokenList out = s.tokens;
  bool changed = false;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (s.tags[i] == PosTag::other || !store.find(out[i]) || store.size() < 2) continue;
    auto nn = nearest_words(out[i], store, rank + 1, true);
    if (nn.size() <= rank) continue;
    const auto& pick = nn[rank];
    if (pick.similarity >= min_sim && pick.word != out[i]) {
      out[i] = pick.word;
      changed = true;
    }
  }
  if (!changed) return std::nullopt;
  return out;
}

struct AugmentedRecord {
  SentenceRecord record;
  int source_line = 0;
};

/// Up to `max_copies` new records per original; copy c uses each word's
/// (c+1)-th nearest neighbour. New line numbers continue after the debate's
/// largest one. Originals are not touched.
inline std::vector<AugmentedRecord> augment_corpus(const std::vector<Debate>& debates, const VectorStore& store,
                                                   const Tagger& tagger, double min_sim, int max_copies) {
  std::vector<AugmentedRecord> out;
  if (max_copies <= 0) return out;
  for (const auto& d : debates) {
    int next_line = 0;
    for (const auto& r : d.records) next_line = std::max(next_line, r.line_number);
    for (const auto& r : d.records) {
      if (!r.label) throw ContractError("augmentation needs a labeled corpus; " + d.debate_id + " has unlabeled lines");
      const auto tagged = tagger.tag(r, tokenize(r.text));
      for (int c = 0; c < max_copies; ++c) {
        auto aug = augment_sentence(tagged, store, min_sim, static_cast<std::size_t>(c));
        if (!aug) continue;
        SentenceRecord rec = r;
        rec.line_number = ++next_line;
        rec.text = join_tokens(*aug);
        out.push_back({std::move(rec), r.line_number});
      }
    }
  }
  return out;
}

}  // namespace checkworthy
