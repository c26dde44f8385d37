#pragma once

// Pipeline configuration: a JSON file whose keys mirror PipelineConfig.
// Missing keys keep their defaults; unknown keys are rejected.
//
//   {
//     "train_dir": "data/train", "test_dir": "data/test",
//     "lexicon": "", "stoplist": "",
//     "features": "sbert,sf,tmf,bigrams",
//     "seed": 42,
//     "gbrt": {"n_trees": 50, "n_leaves": 2, "learning_rate": 0.1, "min_leaf": 1},
//     "topics": {"k": 40, "top_n": 5, "alpha": null, "beta": 0.01, "iterations": 1000},
//     "bigrams": {"threshold": 50},
//     "rules": ["short", "no_signal"],
//     "embedding": {"backend": "fallback", "dim": 768, "store": "", "url": "",
//                   "timeout_ms": 10000, "retries": 2, "parallelism": 4, "batch_size": 64},
//     "augment": {"enabled": false, "min_sim": 0.5, "max_copies": 1,
//                 "word_vectors": "", "pos_sidecar": ""}
//   }

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "checkworthy/embeddings.hpp"
#include "checkworthy/embeddings_http.hpp"
#include "checkworthy/error.hpp"
#include "checkworthy/gbrt.hpp"
#include "checkworthy/ranker.hpp"
#include "checkworthy/sentiment.hpp"
#include "checkworthy/textproc.hpp"
#include "checkworthy/topics.hpp"

namespace checkworthy {

struct EmbeddingSettings {
  /// fallback | store | http
  std::string backend = "fallback";
  std::size_t dim = kDefaultEmbeddingDim;
  std::string store;
  std::string url;
  int timeout_ms = 10000;
  int retries = 2;
  int parallelism = 4;
  std::size_t batch_size = 64;
};

struct TopicSettings {
  int k = 40;
  int top_n = 5;
  std::optional<double> alpha;
  double beta = 0.01;
  int iterations = 1000;
};

struct AugmentSettings {
  bool enabled = false;
  double min_sim = 0.5;
  int max_copies = 1;
  std::string word_vectors;
  std::string pos_sidecar;
};

struct PipelineConfig {
  std::string train_dir;
  std::string test_dir;
  /// Empty means the built-in resource.
  std::string lexicon;
  std::string stoplist;
  FeatureBlocks features = FeatureBlocks::all();
  GbrtConfig gbrt;
  TopicSettings topics;
  int bigram_threshold = 50;
  std::vector<std::string> rules;
  EmbeddingSettings embedding;
  AugmentSettings augment;
  std::uint64_t seed = 42;

  LdaParams lda_params() const {
    LdaParams p;
    p.topics = topics.k;
    p.alpha = topics.alpha;
    p.beta = topics.beta;
    p.iterations = topics.iterations;
    p.seed = seed;
    return p;
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

template <typename T>
void read_key(const nlohmann::json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config key '" + where + key + "' has the wrong type");
  }
}

}  // namespace detail

inline PipelineConfig parse_config(const std::string& text, const std::string& source) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(source + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(source + ": config must be a JSON object");
  using detail::read_key;
  detail::reject_unknown(doc,
                         {"train_dir", "test_dir", "lexicon", "stoplist", "features", "seed", "gbrt", "topics",
                          "bigrams", "rules", "embedding", "augment"},
                         "");
  PipelineConfig cfg;
  read_key(doc, "train_dir", cfg.train_dir, "");
  read_key(doc, "test_dir", cfg.test_dir, "");
  read_key(doc, "lexicon", cfg.lexicon, "");
  read_key(doc, "stoplist", cfg.stoplist, "");
  read_key(doc, "seed", cfg.seed, "");
  read_key(doc, "rules", cfg.rules, "");
  if (doc.contains("features")) {
    std::string f;
    read_key(doc, "features", f, "");
    cfg.features = FeatureBlocks::parse(f);
  }
  if (doc.contains("gbrt")) {
    const auto& g = doc["gbrt"];
    detail::reject_unknown(g, {"n_trees", "n_leaves", "learning_rate", "min_leaf"}, "gbrt.");
    read_key(g, "n_trees", cfg.gbrt.n_trees, "gbrt.");
    read_key(g, "n_leaves", cfg.gbrt.n_leaves, "gbrt.");
    read_key(g, "learning_rate", cfg.gbrt.learning_rate, "gbrt.");
    read_key(g, "min_leaf", cfg.gbrt.min_leaf, "gbrt.");
  }
  if (doc.contains("topics")) {
    const auto& t = doc["topics"];
    detail::reject_unknown(t, {"k", "top_n", "alpha", "beta", "iterations"}, "topics.");
    read_key(t, "k", cfg.topics.k, "topics.");
    read_key(t, "top_n", cfg.topics.top_n, "topics.");
    if (t.contains("alpha") && !t["alpha"].is_null()) {
      double a = 0;
      read_key(t, "alpha", a, "topics.");
      cfg.topics.alpha = a;
    }
    read_key(t, "beta", cfg.topics.beta, "topics.");
    read_key(t, "iterations", cfg.topics.iterations, "topics.");
  }
  if (doc.contains("bigrams")) {
    const auto& b = doc["bigrams"];
    detail::reject_unknown(b, {"threshold"}, "bigrams.");
    read_key(b, "threshold", cfg.bigram_threshold, "bigrams.");
  }
  if (doc.contains("embedding")) {
    const auto& e = doc["embedding"];
    detail::reject_unknown(e, {"backend", "dim", "store", "url", "timeout_ms", "retries", "parallelism", "batch_size"},
                           "embedding.");
    read_key(e, "backend", cfg.embedding.backend, "embedding.");
    read_key(e, "dim", cfg.embedding.dim, "embedding.");
    read_key(e, "store", cfg.embedding.store, "embedding.");
    read_key(e, "url", cfg.embedding.url, "embedding.");
    read_key(e, "timeout_ms", cfg.embedding.timeout_ms, "embedding.");
    read_key(e, "retries", cfg.embedding.retries, "embedding.");
    read_key(e, "parallelism", cfg.embedding.parallelism, "embedding.");
    read_key(e, "batch_size", cfg.embedding.batch_size, "embedding.");
  }
  if (doc.contains("augment")) {
    const auto& a = doc["augment"];
    detail::reject_unknown(a, {"enabled", "min_sim", "max_copies", "word_vectors", "pos_sidecar"}, "augment.");
    read_key(a, "enabled", cfg.augment.enabled, "augment.");
    read_key(a, "min_sim", cfg.augment.min_sim, "augment.");
    read_key(a, "max_copies", cfg.augment.max_copies, "augment.");
    read_key(a, "word_vectors", cfg.augment.word_vectors, "augment.");
    read_key(a, "pos_sidecar", cfg.augment.pos_sidecar, "augment.");
  }
  return cfg;
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = io::read_file(path.string());
  } catch (const Error&) {
    throw ConfigError("cannot read config file " + path.string());
  }
  return parse_config(text, path.string());
}

inline Stoplist resolve_stoplist(const PipelineConfig& cfg) {
  return cfg.stoplist.empty() ? default_stoplist() : load_stoplist(cfg.stoplist);
}

inline SentimentLexicon resolve_lexicon(const PipelineConfig& cfg) {
  return cfg.lexicon.empty() ? default_lexicon() : load_lexicon(cfg.lexicon);
}

/// Builds the configured embedding backend. For `http` the URL comes from the
/// config, falling back to $CHECKWORTHY_EMBED_URL.
inline std::unique_ptr<EmbeddingBackend> make_backend(const EmbeddingSettings& s) {
  if (s.backend == "fallback") return std::make_unique<FallbackEmbedder>(s.dim);
  if (s.backend == "store") {
    if (s.store.empty()) throw ConfigError("store backend needs embedding.store");
    auto store = std::make_shared<const VectorStore>(load_vector_file(s.store));
    if (store->dim() != s.dim) {
      throw ConfigError("vector store " + s.store + " has dim " + std::to_string(store->dim()) + ", config says " +
                        std::to_string(s.dim));
    }
    return std::make_unique<StoreEmbedder>(std::move(store));
  }
  if (s.backend == "http") {
    HttpEmbedderConfig h;
    h.url = s.url.empty() ? embed_url_from_env() : s.url;
    h.dim = s.dim;
    h.timeout_ms = s.timeout_ms;
    h.retries = s.retries;
    h.parallelism = s.parallelism;
    h.batch_size = s.batch_size;
    return std::make_unique<HttpEmbedder>(h);
  }
  throw ConfigError("unknown embedding backend '" + s.backend + "' (expected fallback, store, http)");
}

}  // namespace checkworthy
