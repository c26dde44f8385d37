#pragma once

/**
 * LDA topic model trained by collapsed Gibbs sampling, and the per-sentence
 * topic-word features derived from it.
 *
 * Sampler state:
 *   z[i]      topic of token i
 *   n_dk[d,k] tokens of document d assigned to topic k
 *   n_kw[k,w] occurrences of word w assigned to topic k
 *   n_k[k]    tokens assigned to topic k
 *
 * Each sweep resamples every token from
 *   p(k) ∝ (n_dk + alpha) (n_kw + beta) / (n_k + V beta)
 * with the token's own assignment removed from the counts. After the last
 * sweep phi[k][w] = (n_kw + beta) / (n_k + V beta).
 */

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "checkworthy/error.hpp"
#include "checkworthy/textproc.hpp"

namespace checkworthy {

class Dictionary {
 public:
  /// Returns the id of `word`, assigning the next dense id if unseen.
  int add(const std::string& word) {
    auto [it, inserted] = id_of_.emplace(word, static_cast<int>(word_of_.size()));
    if (inserted) word_of_.push_back(word);
    return it->second;
  }

  std::optional<int> id(const std::string& word) const {
    auto it = id_of_.find(word);
    if (it == id_of_.end()) return std::nullopt;
    return it->second;
  }

  const std::string& word(int id) const { return word_of_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return word_of_.size(); }
  const std::vector<std::string>& words() const noexcept { return word_of_; }

  bool operator==(const Dictionary& o) const { return word_of_ == o.word_of_; }

 private:
  std::unordered_map<std::string, int> id_of_;
  std::vector<std::string> word_of_;
};

/// Sparse word-id counts, ordered by id.
using BowDocument = std::map<int, int>;

inline Dictionary build_dictionary(const std::vector<TokenList>& docs) {
  Dictionary dict;
  for (const auto& d : docs) {
    for (const auto& w : d) dict.add(w);
  }
  return dict;
}

/// Bag-of-words for `tokens`; words missing from the dictionary are dropped.
inline BowDocument to_bow(const TokenList& tokens, const Dictionary& dict) {
  BowDocument bow;
  for (const auto& t : tokens) {
    if (auto id = dict.id(t)) ++bow[*id];
  }
  return bow;
}

struct LdaParams {
  int topics = 40;
  /// Unset means 50 / topics.
  std::optional<double> alpha;
  double beta = 0.01;
  int iterations = 1000;
  std::uint64_t seed = 1;

  double resolved_alpha() const { return alpha.value_or(50.0 / topics); }
};

struct TopicModel {
  int topics = 0;
  int vocab_size = 0;
  /// Row-major topics x vocab_size matrix of topic-word probabilities.
  std::vector<double> phi;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  Dictionary dictionary;

  bool operator==(const TopicModel&) const = default;

  double prob(int topic, int word) const {
    return phi[static_cast<std::size_t>(topic) * static_cast<std::size_t>(vocab_size) + static_cast<std::size_t>(word)];
  }
};

namespace detail {

// Uniform double in [0, 1) from the top 53 bits; independent of the
// standard library's distribution implementations.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Fits LDA over `docs` with vocabulary size `vocab_size` (ids must be
/// below it). Deterministic for a fixed input order and parameters.
inline TopicModel fit_lda(const std::vector<BowDocument>& docs, int vocab_size, const LdaParams& params) {
  if (params.topics < 1) throw ConfigError("topic count must be >= 1");
  if (params.iterations < 1) throw ConfigError("LDA iterations must be >= 1");
  if (params.resolved_alpha() <= 0.0 || params.beta <= 0.0) throw ConfigError("alpha and beta must be positive");
  if (docs.empty()) throw ContractError("LDA needs at least one document");
  if (vocab_size < 1) throw ContractError("LDA needs a non-empty vocabulary");

  const auto K = static_cast<std::size_t>(params.topics);
  const auto V = static_cast<std::size_t>(vocab_size);
  const double alpha = params.resolved_alpha();
  const double beta = params.beta;
  const double vbeta = static_cast<double>(V) * beta;

  std::vector<int> words;
  std::vector<std::size_t> doc_of;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    for (const auto& [w, c] : docs[d]) {
      if (w < 0 || static_cast<std::size_t>(w) >= V || c < 1) {
        throw ContractError("bag-of-words entry out of range in document " + std::to_string(d));
      }
      for (int i = 0; i < c; ++i) {
        words.push_back(w);
        doc_of.push_back(d);
      }
    }
  }
  if (words.empty()) throw ContractError("LDA corpus has no tokens");

  std::mt19937_64 rng(params.seed);
  std::vector<int> z(words.size());
  std::vector<int> n_dk(docs.size() * K, 0);
  std::vector<int> n_kw(K * V, 0);
  std::vector<int> n_k(K, 0);

  for (std::size_t i = 0; i < words.size(); ++i) {
    auto k = static_cast<std::size_t>(detail::unit_uniform(rng) * static_cast<double>(K));
    k = std::min(k, K - 1);
    z[i] = static_cast<int>(k);
    ++n_dk[doc_of[i] * K + k];
    ++n_kw[k * V + static_cast<std::size_t>(words[i])];
    ++n_k[k];
  }

  std::vector<double> cumulative(K);
  for (int it = 0; it < params.iterations; ++it) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      const auto w = static_cast<std::size_t>(words[i]);
      const auto d = doc_of[i];
      auto k = static_cast<std::size_t>(z[i]);
      --n_dk[d * K + k];
      --n_kw[k * V + w];
      --n_k[k];

      double total = 0.0;
      for (std::size_t t = 0; t < K; ++t) {
        total += (n_dk[d * K + t] + alpha) * (n_kw[t * V + w] + beta) / (n_k[t] + vbeta);
        cumulative[t] = total;
      }
      const double u = detail::unit_uniform(rng) * total;
      k = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin());
      k = std::min(k, K - 1);

      z[i] = static_cast<int>(k);
      ++n_dk[d * K + k];
      ++n_kw[k * V + w];
      ++n_k[k];
    }
  }

  TopicModel model;
  model.topics = params.topics;
  model.vocab_size = vocab_size;
  model.alpha = alpha;
  model.beta = beta;
  model.seed = params.seed;
  model.phi.resize(K * V);
  for (std::size_t k = 0; k < K; ++k) {
    const double denom = n_k[k] + vbeta;
    for (std::size_t w = 0; w < V; ++w) model.phi[k * V + w] = (n_kw[k * V + w] + beta) / denom;
  }
  return model;
}

/// Convenience overload: builds the dictionary from token lists and keeps it
/// in the model.
inline TopicModel fit_lda(const std::vector<TokenList>& docs, const LdaParams& params) {
  auto dict = build_dictionary(docs);
  std::vector<BowDocument> bows;
  bows.reserve(docs.size());
  for (const auto& d : docs) bows.push_back(to_bow(d, dict));
  auto model = fit_lda(bows, static_cast<int>(dict.size()), params);
  model.dictionary = std::move(dict);
  return model;
}

struct WordScore {
  int word_id = 0;
  std::string word;
  double score = 0.0;

  bool operator==(const WordScore&) const = default;
};

/// The `n` most probable words of `topic`, best first, equal
/// probabilities ordered by ascending word id.
inline std::vector<WordScore> top_words(const TopicModel& model, int topic, int n) {
  if (topic < 0 || topic >= model.topics) throw ContractError("topic index out of range");
  const auto take = static_cast<std::size_t>(std::clamp(n, 0, model.vocab_size));
  std::vector<int> ids(static_cast<std::size_t>(model.vocab_size));
  std::iota(ids.begin(), ids.end(), 0);
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(), [&](int a, int b) {
    const double pa = model.prob(topic, a), pb = model.prob(topic, b);
    return pa != pb ? pa > pb : a < b;
  });
  std::vector<WordScore> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const int id = ids[i];
    std::string w = static_cast<std::size_t>(id) < model.dictionary.size() ? model.dictionary.word(id) : std::to_string(id);
    out.push_back({id, std::move(w), model.prob(topic, id)});
  }
  return out;
}

/// Words that are a top word of some topic, each with the largest phi it
/// reaches among the topics where it ranks in the top `top_n`.
struct TopicFeatureVocab {
  std::vector<WordScore> entries;

  bool operator==(const TopicFeatureVocab&) const = default;

  std::size_t size() const noexcept { return entries.size(); }

  bool contains(const std::string& w) const {
    return std::any_of(entries.begin(), entries.end(), [&](const WordScore& e) { return e.word == w; });
  }
};

inline TopicFeatureVocab build_topic_vocab(const TopicModel& model, int top_n) {
  std::map<int, WordScore> best;
  for (int k = 0; k < model.topics; ++k) {
    for (auto& ws : top_words(model, k, top_n)) {
      auto it = best.find(ws.word_id);
      if (it == best.end()) {
        best.emplace(ws.word_id, std::move(ws));
      } else if (ws.score > it->second.score) {
        it->second.score = ws.score;
      }
    }
  }
  TopicFeatureVocab vocab;
  for (auto& [id, ws] : best) vocab.entries.push_back(std::move(ws));
  return vocab;
}

/// Slot i holds entry i's score when its word occurs in `tokens`, else 0.
inline std::vector<double> topic_feature_vector(const TokenList& tokens, const TopicFeatureVocab& vocab) {
  std::vector<double> out(vocab.size(), 0.0);
  if (tokens.empty()) return out;
  std::unordered_set<std::string_view> present(tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < vocab.entries.size(); ++i) {
    if (present.count(vocab.entries[i].word)) out[i] = vocab.entries[i].score;
  }
  return out;
}

}  // namespace checkworthy
