#pragma once

// Feature assembly, the model bundle, and rule-based reranking.
//
// Feature blocks are concatenated in a fixed order, skipping disabled ones:
//   sbert    embedding values (dim slots)
//   sf       sent_neg, sent_neu, sent_pos
//   tmf      one slot per topic-vocabulary word
//   bigrams  bigram_cw_count, bigram_ncw_count

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "checkworthy/binary_io.hpp"
#include "checkworthy/corpus.hpp"
#include "checkworthy/embeddings.hpp"
#include "checkworthy/error.hpp"
#include "checkworthy/gbrt.hpp"
#include "checkworthy/sentiment.hpp"
#include "checkworthy/textproc.hpp"
#include "checkworthy/topics.hpp"

namespace checkworthy {

struct FeatureBlocks {
  bool embedding = false;
  bool sentiment = false;
  bool topics = false;
  bool bigrams = false;

  bool operator==(const FeatureBlocks&) const = default;

  bool any() const { return embedding || sentiment || topics || bigrams; }

  static FeatureBlocks all() { return {true, true, true, true}; }

  /// Parses a comma list of `sbert`, `sf`, `tmf`, `bigrams` (or `all`).
  static FeatureBlocks parse(std::string_view list) {
    FeatureBlocks b;
    std::size_t start = 0;
    while (start <= list.size()) {
      auto end = list.find(',', start);
      if (end == std::string_view::npos) end = list.size();
      auto name = detail::trim(list.substr(start, end - start));
      if (name == "sbert") {
        b.embedding = true;
      } else if (name == "sf") {
        b.sentiment = true;
      } else if (name == "tmf") {
        b.topics = true;
      } else if (name == "bigrams") {
        b.bigrams = true;
      } else if (name == "all") {
        b = all();
      } else if (!name.empty()) {
        throw ConfigError("unknown feature block '" + std::string(name) + "' (expected sbert, sf, tmf, bigrams)");
      }
      start = end + 1;
    }
    return b;
  }

  std::string to_string() const {
    std::string out;
    auto add = [&](bool on, const char* n) {
      if (!on) return;
      if (!out.empty()) out += ',';
      out += n;
    };
    add(embedding, "sbert");
    add(sentiment, "sf");
    add(topics, "tmf");
    add(bigrams, "bigrams");
    return out;
  }
};

struct FeatureBlock {
  std::string name;
  std::size_t offset = 0;
  std::size_t size = 0;

  bool operator==(const FeatureBlock&) const = default;
};

struct FeatureManifest {
  std::vector<std::string> names;
  std::vector<FeatureBlock> blocks;

  bool operator==(const FeatureManifest&) const = default;

  std::size_t size() const noexcept { return names.size(); }

  const FeatureBlock* block(std::string_view name) const {
    for (const auto& b : blocks) {
      if (b.name == name) return &b;
    }
    return nullptr;
  }
};

/// Trained state the extractors need at scoring time.
struct ExtractorState {
  std::size_t embedding_dim = 0;
  std::string embedding_kind;
  SentimentLexicon lexicon;
  TopicModel topic_model;
  int topic_top_n = 5;
  TopicFeatureVocab topic_vocab;
  BigramSet bigrams;

  bool operator==(const ExtractorState&) const = default;
};

inline FeatureManifest build_manifest(const FeatureBlocks& blocks, const ExtractorState& state) {
  FeatureManifest m;
  auto open = [&](const char* name) { m.blocks.push_back({name, m.names.size(), 0}); };
  auto close = [&] { m.blocks.back().size = m.names.size() - m.blocks.back().offset; };
  if (blocks.embedding) {
    open("sbert");
    for (std::size_t i = 0; i < state.embedding_dim; ++i) m.names.push_back("emb_" + std::to_string(i));
    close();
  }
  if (blocks.sentiment) {
    open("sf");
    m.names.insert(m.names.end(), {"sent_neg", "sent_neu", "sent_pos"});
    close();
  }
  if (blocks.topics) {
    open("tmf");
    for (const auto& e : state.topic_vocab.entries) m.names.push_back("topic_" + e.word);
    close();
  }
  if (blocks.bigrams) {
    open("bigrams");
    m.names.insert(m.names.end(), {"bigram_cw_count", "bigram_ncw_count"});
    close();
  }
  return m;
}

struct FeatureVector {
  std::vector<double> values;
  std::shared_ptr<const FeatureManifest> manifest;
};

/// Builds feature vectors for one fixed block configuration.
class FeatureAssembler {
 public:
  FeatureAssembler(FeatureBlocks blocks, const ExtractorState& state)
      : blocks_(blocks), state_(state), manifest_(std::make_shared<FeatureManifest>(build_manifest(blocks, state))) {
    if (!blocks_.any()) throw ConfigError("at least one feature block must be enabled");
  }

  const FeatureBlocks& blocks() const noexcept { return blocks_; }
  const std::shared_ptr<const FeatureManifest>& manifest() const noexcept { return manifest_; }

  /// `embedding` is the sentence's vector; ignored when the sbert block is off.
  FeatureVector assemble(const SentenceRecord& record, std::span<const double> embedding) const {
    FeatureVector fv;
    fv.manifest = manifest_;
    fv.values.reserve(manifest_->size());
    const auto tokens = tokenize(record.text);
    if (blocks_.embedding) {
      if (embedding.size() != state_.embedding_dim) {
        throw ContractError("embedding for " + record.debate_id + ":" + std::to_string(record.line_number) + " has " +
                            std::to_string(embedding.size()) + " values, expected " +
                            std::to_string(state_.embedding_dim));
      }
      fv.values.insert(fv.values.end(), embedding.begin(), embedding.end());
    }
    if (blocks_.sentiment) {
      const auto s = score_sentence(tokens, state_.lexicon);
      fv.values.insert(fv.values.end(), {s.neg, s.neu, s.pos});
    }
    if (blocks_.topics) {
      const auto t = topic_feature_vector(tokens, state_.topic_vocab);
      fv.values.insert(fv.values.end(), t.begin(), t.end());
    }
    if (blocks_.bigrams) {
      const auto h = state_.bigrams.count_hits(tokens);
      fv.values.push_back(h.checkworthy);
      fv.values.push_back(h.non_checkworthy);
    }
    return fv;
  }

  /// Feature vectors for every record of `debate`, embedding through
  /// `backend` when the sbert block is on.
  std::vector<FeatureVector> assemble_debate(const Debate& debate, const EmbeddingBackend* backend) const {
    std::vector<EmbeddingVector> emb;
    if (blocks_.embedding) {
      if (!backend) throw ConfigError("sbert features need an embedding backend");
      if (backend->dim() != state_.embedding_dim) {
        throw ContractError("embedding backend dim " + std::to_string(backend->dim()) + " does not match model dim " +
                            std::to_string(state_.embedding_dim));
      }
      std::vector<std::string> texts;
      texts.reserve(debate.records.size());
      for (const auto& r : debate.records) texts.push_back(r.text);
      emb = embed_batch(texts, *backend);
    }
    std::vector<FeatureVector> out;
    out.reserve(debate.records.size());
    for (std::size_t i = 0; i < debate.records.size(); ++i) {
      out.push_back(assemble(debate.records[i], blocks_.embedding ? std::span<const double>(emb[i]) : std::span<const double>{}));
    }
    return out;
  }

 private:
  FeatureBlocks blocks_;
  const ExtractorState& state_;
  std::shared_ptr<const FeatureManifest> manifest_;
};

/// A trained ranker: boosted trees plus everything needed to rebuild its
/// feature vectors.
struct GbrtModel {
  FeatureBlocks blocks;
  FeatureManifest manifest;
  ExtractorState extractors;
  GbrtConfig config;
  BoostedTrees ensemble;

  bool operator==(const GbrtModel&) const = default;

  FeatureAssembler assembler() const { return FeatureAssembler(blocks, extractors); }
};

inline double predict(const GbrtModel& model, const FeatureVector& fv) {
  if (fv.manifest && *fv.manifest != model.manifest) {
    throw ContractError("feature manifest does not match the model (" + std::to_string(fv.manifest->size()) + " vs " +
                        std::to_string(model.manifest.size()) + " features)");
  }
  if (fv.values.size() != model.manifest.size()) {
    throw ContractError("feature vector has " + std::to_string(fv.values.size()) + " values, model manifest has " +
                        std::to_string(model.manifest.size()));
  }
  return model.ensemble.predict(fv.values);
}

struct RerankRule {
  std::string name;
  std::function<bool(const SentenceRecord&, const TokenList&)> matches;
};

inline constexpr double kRuleDemotionStep = 1e-6;

/// Built-in rules: `short` (fewer than 3 tokens) and `no_signal` (no digit,
/// no topic-vocabulary word and no selected bigram).
inline RerankRule make_rule(std::string_view name, const ExtractorState& state) {
  if (name == "short") {
    return {"short", [](const SentenceRecord&, const TokenList& t) { return t.size() < 3; }};
  }
  if (name == "no_signal") {
    return {"no_signal", [&state](const SentenceRecord&, const TokenList& tokens) {
              for (const auto& t : tokens) {
                if (std::any_of(t.begin(), t.end(), [](char c) { return c >= '0' && c <= '9'; })) return false;
                if (state.topic_vocab.contains(t)) return false;
              }
              return state.bigrams.count_hits(tokens).total() == 0;
            }};
  }
  throw ConfigError("unknown rerank rule '" + std::string(name) + "' (expected short, no_signal)");
}

inline std::vector<RerankRule> make_rules(const std::vector<std::string>& names, const ExtractorState& state) {
  std::vector<RerankRule> rules;
  for (const auto& n : names) rules.push_back(make_rule(n, state));
  return rules;
}

/// Orders a debate by score. A sentence matched by a rule (the first match,
/// at priority p) is rescored to min_natural - 1 - p * 1e-6, so it lands after
/// every unmatched sentence. Ties go by ascending line number.
inline std::vector<RunEntry> rank_scores(const Debate& debate, const std::vector<double>& scores,
                                         const std::vector<RerankRule>& rules) {
  if (scores.size() != debate.records.size()) throw ContractError("one score per sentence required");
  std::vector<RunEntry> out;
  out.reserve(scores.size());
  if (scores.empty()) return out;
  for (double s : scores) {
    if (!std::isfinite(s)) throw ContractError("non-finite score in " + debate.debate_id);
  }
  const double floor = *std::min_element(scores.begin(), scores.end()) - 1.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto& rec = debate.records[i];
    double s = scores[i];
    if (!rules.empty()) {
      const auto tokens = tokenize(rec.text);
      for (std::size_t p = 0; p < rules.size(); ++p) {
        if (rules[p].matches(rec, tokens)) {
          s = floor - static_cast<double>(p) * kRuleDemotionStep;
          break;
        }
      }
    }
    out.push_back({rec.line_number, s});
  }
  sort_run(out);
  return out;
}

inline std::vector<double> score_debate(const GbrtModel& model, const Debate& debate, const EmbeddingBackend* backend) {
  const auto assembler = model.assembler();
  std::vector<double> scores;
  scores.reserve(debate.records.size());
  for (const auto& fv : assembler.assemble_debate(debate, backend)) scores.push_back(predict(model, fv));
  return scores;
}

inline std::vector<RunEntry> rank_debate(const GbrtModel& model, const Debate& debate, const std::vector<RerankRule>& rules,
                                         const EmbeddingBackend* backend) {
  return rank_scores(debate, score_debate(model, debate, backend), rules);
}

// Model bundle: "CLRKMDL", u32 version, then the sections below in order.

inline constexpr std::string_view kBundleMagic = "CLRKMDL";
inline constexpr std::uint32_t kBundleVersion = 1;

inline std::string encode_bundle(const GbrtModel& m) {
  io::ByteWriter w;
  w.bytes(kBundleMagic);
  w.u32(kBundleVersion);

  w.u8(static_cast<std::uint8_t>((m.blocks.embedding ? 1 : 0) | (m.blocks.sentiment ? 2 : 0) |
                                 (m.blocks.topics ? 4 : 0) | (m.blocks.bigrams ? 8 : 0)));
  w.u32(static_cast<std::uint32_t>(m.manifest.names.size()));
  for (const auto& n : m.manifest.names) w.str(n);
  w.u32(static_cast<std::uint32_t>(m.manifest.blocks.size()));
  for (const auto& b : m.manifest.blocks) {
    w.str(b.name);
    w.u64(b.offset);
    w.u64(b.size);
  }

  const auto& x = m.extractors;
  w.u64(x.embedding_dim);
  w.str(x.embedding_kind);
  w.u32(static_cast<std::uint32_t>(x.lexicon.entries.size()));
  for (const auto& [word, v] : x.lexicon.entries) {
    w.str(word);
    w.f64(v);
  }

  const auto& tm = x.topic_model;
  w.i32(tm.topics);
  w.i32(tm.vocab_size);
  w.f64(tm.alpha);
  w.f64(tm.beta);
  w.u64(tm.seed);
  w.u32(static_cast<std::uint32_t>(tm.dictionary.size()));
  for (const auto& word : tm.dictionary.words()) w.str(word);
  w.u64(tm.phi.size());
  for (double p : tm.phi) w.f64(p);
  w.i32(x.topic_top_n);
  w.u32(static_cast<std::uint32_t>(x.topic_vocab.entries.size()));
  for (const auto& e : x.topic_vocab.entries) {
    w.i32(e.word_id);
    w.str(e.word);
    w.f64(e.score);
  }

  w.i32(x.bigrams.threshold);
  w.u32(static_cast<std::uint32_t>(x.bigrams.bigrams.size()));
  for (const auto& [bg, side] : x.bigrams.bigrams) {
    w.str(bg.first);
    w.str(bg.second);
    w.u8(static_cast<std::uint8_t>(side));
  }

  w.i32(m.config.n_trees);
  w.i32(m.config.n_leaves);
  w.f64(m.config.learning_rate);
  w.i32(m.config.min_leaf);
  w.u64(m.config.seed);
  encode_trees(w, m.ensemble);
  return w.data();
}

inline GbrtModel decode_bundle(std::string_view data, const std::string& source) {
  io::ByteReader r(data, source);
  if (data.size() < kBundleMagic.size() || r.bytes(kBundleMagic.size()) != kBundleMagic) {
    throw FormatError(source + ": not a model bundle (bad magic)");
  }
  const auto version = r.u32();
  if (version != kBundleVersion) throw FormatError(source + ": unsupported bundle version " + std::to_string(version));

  GbrtModel m;
  const auto flags = r.u8();
  m.blocks = {(flags & 1) != 0, (flags & 2) != 0, (flags & 4) != 0, (flags & 8) != 0};
  m.manifest.names.resize(r.u32());
  for (auto& n : m.manifest.names) n = r.str();
  m.manifest.blocks.resize(r.u32());
  for (auto& b : m.manifest.blocks) {
    b.name = r.str();
    b.offset = r.u64();
    b.size = r.u64();
  }

  auto& x = m.extractors;
  x.embedding_dim = r.u64();
  x.embedding_kind = r.str();
  const auto nlex = r.u32();
  for (std::uint32_t i = 0; i < nlex; ++i) {
    auto word = r.str();
    x.lexicon.entries[std::move(word)] = r.f64();
  }

  auto& tm = x.topic_model;
  tm.topics = r.i32();
  tm.vocab_size = r.i32();
  tm.alpha = r.f64();
  tm.beta = r.f64();
  tm.seed = r.u64();
  const auto nwords = r.u32();
  for (std::uint32_t i = 0; i < nwords; ++i) tm.dictionary.add(r.str());
  const auto nphi = r.u64();
  if (nphi != static_cast<std::uint64_t>(std::max(tm.topics, 0)) * static_cast<std::uint64_t>(std::max(tm.vocab_size, 0)) ||
      nphi > r.remaining() / 8) {
    throw FormatError(source + ": topic matrix size does not match its shape");
  }
  tm.phi.resize(nphi);
  for (auto& p : tm.phi) p = r.f64();
  x.topic_top_n = r.i32();
  x.topic_vocab.entries.resize(r.u32());
  for (auto& e : x.topic_vocab.entries) {
    e.word_id = r.i32();
    e.word = r.str();
    e.score = r.f64();
  }

  x.bigrams.threshold = r.i32();
  const auto nbg = r.u32();
  for (std::uint32_t i = 0; i < nbg; ++i) {
    auto a = r.str();
    auto b = r.str();
    const auto side = r.u8();
    if (side > 1) throw FormatError(source + ": bad bigram side");
    x.bigrams.bigrams.emplace(Bigram{std::move(a), std::move(b)}, static_cast<BigramSide>(side));
  }

  m.config.n_trees = r.i32();
  m.config.n_leaves = r.i32();
  m.config.learning_rate = r.f64();
  m.config.min_leaf = r.i32();
  m.config.seed = r.u64();
  m.ensemble = decode_trees(r);
  if (!r.done()) throw FormatError(source + ": trailing bytes in bundle");

  if (build_manifest(m.blocks, m.extractors) != m.manifest) throw FormatError(source + ": manifest inconsistent with extractors");
  if (m.ensemble.feature_count != m.manifest.size()) throw FormatError(source + ": tree feature count does not match manifest");
  return m;
}

inline void save_bundle(const GbrtModel& m, const std::filesystem::path& path) {
  io::write_file(path.string(), encode_bundle(m));
}

inline GbrtModel load_bundle(const std::filesystem::path& path) {
  return decode_bundle(io::read_file(path.string()), path.string());
}

}  // namespace checkworthy
