#pragma once

// Sentence and word vectors: the on-disk vector store, the backend interface,
// the store-backed and deterministic fallback backends, and cosine
// nearest-neighbour lookup. The HTTP backend lives in embeddings_http.hpp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "checkworthy/binary_io.hpp"
#include "checkworthy/error.hpp"

namespace checkworthy {

inline constexpr std::size_t kDefaultEmbeddingDim = 768;

using EmbeddingVector = std::vector<double>;

/// Trim, collapse internal whitespace runs to one space, lowercase ASCII.
inline std::string normalize_text(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c);
  }
  return out;
}

/// 64-bit FNV-1a.
inline std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Store key of a sentence: hex hash of its normalized text.
inline std::string text_key(std::string_view text) {
  static constexpr char hex[] = "0123456789abcdef";
  auto h = stable_hash(normalize_text(text));
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

/// Vectors keyed by sentence hash or by word. All vectors have length `dim`.
class VectorStore {
 public:
  VectorStore() = default;
  explicit VectorStore(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return vectors_.size(); }
  bool empty() const noexcept { return vectors_.empty(); }

  void put(std::string key, std::vector<float> v) {
    if (v.size() != dim_) {
      throw ContractError("vector for '" + key + "' has length " + std::to_string(v.size()) + ", store dim is " +
                          std::to_string(dim_));
    }
    if (key.size() > 0xffff) throw ContractError("store key longer than 65535 bytes");
    vectors_.insert_or_assign(std::move(key), std::move(v));
  }

  const std::vector<float>* find(const std::string& key) const {
    auto it = vectors_.find(key);
    return it == vectors_.end() ? nullptr : &it->second;
  }

  const std::map<std::string, std::vector<float>>& entries() const noexcept { return vectors_; }

  bool operator==(const VectorStore&) const = default;

 private:
  std::size_t dim_ = 0;
  std::map<std::string, std::vector<float>> vectors_;
};

inline constexpr std::string_view kVectorFileMagic = "CLRK";
inline constexpr std::uint32_t kVectorFileVersion = 1;

/// Layout: "CLRK", u32 version, u32 dim, u64 count, then per record u16 key
/// length, key bytes, dim float32. All integers and floats little-endian.
inline std::string encode_vector_store(const VectorStore& store) {
  io::ByteWriter w;
  w.bytes(kVectorFileMagic);
  w.u32(kVectorFileVersion);
  w.u32(static_cast<std::uint32_t>(store.dim()));
  w.u64(store.size());
  for (const auto& [key, vec] : store.entries()) {
    w.u16(static_cast<std::uint16_t>(key.size()));
    w.bytes(key);
    for (float f : vec) w.f32(f);
  }
  return w.data();
}

inline VectorStore decode_vector_store(std::string_view data, const std::string& source) {
  io::ByteReader r(data, source);
  if (data.size() < kVectorFileMagic.size() || r.bytes(kVectorFileMagic.size()) != kVectorFileMagic) {
    throw FormatError(source + ": not a vector file (bad magic)");
  }
  const auto version = r.u32();
  if (version != kVectorFileVersion) {
    throw FormatError(source + ": unsupported vector file version " + std::to_string(version));
  }
  const auto dim = r.u32();
  const auto count = r.u64();
  VectorStore store(dim);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto klen = r.u16();
    std::string key(r.bytes(klen));
    if (r.remaining() < static_cast<std::size_t>(dim) * 4) {
      throw FormatError(source + ": record " + std::to_string(i) + " ('" + key + "') is truncated");
    }
    std::vector<float> v(dim);
    for (auto& f : v) f = r.f32();
    store.put(std::move(key), std::move(v));
  }
  if (!r.done()) throw FormatError(source + ": trailing bytes after " + std::to_string(count) + " records");
  return store;
}

inline void save_vector_file(const VectorStore& store, const std::filesystem::path& path) {
  io::write_file(path.string(), encode_vector_store(store));
}

inline VectorStore load_vector_file(const std::filesystem::path& path) {
  return decode_vector_store(io::read_file(path.string()), path.string());
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Cosine similarity; 0 when either vector is all zeros.
template <typename T>
double cosine(std::span<const T> a, std::span<const T> b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i], y = b[i];
    ab += x * y;
    aa += x * x;
    bb += y * y;
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

struct Neighbor {
  std::string word;
  double similarity = 0.0;

  bool operator==(const Neighbor&) const = default;
};

/// The `k` stored entries most cosine-similar to `word`, best first;
/// equal similarities ordered lexicographically.
inline std::vector<Neighbor> nearest_words(const std::string& word, const VectorStore& store, std::size_t k,
                                           bool exclude_self) {
  const auto* q = store.find(word);
  if (!q) throw MissingKeyError("word not in vector store: '" + word + "'");
  std::vector<Neighbor> all;
  all.reserve(store.size());
  for (const auto& [key, vec] : store.entries()) {
    if (exclude_self && key == word) continue;
    all.push_back({key, cosine<float>(*q, vec)});
  }
  const auto take = std::min(k, all.size());
  // entries() iterates in key order, so a stable sort keeps ties lexicographic.
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.similarity > b.similarity; });
  all.resize(take);
  return all;
}

inline Neighbor nearest_word(const std::string& word, const VectorStore& store, bool exclude_self) {
  if (exclude_self && store.size() < 2) throw ContractError("nearest_word with exclude_self needs at least 2 entries");
  auto best = nearest_words(word, store, 1, exclude_self);
  return best.front();
}

/// A source of fixed-dimension sentence vectors.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::size_t dim() const = 0;
  /// "fallback", "store" or "http"; recorded in model bundles.
  virtual std::string kind() const = 0;
  virtual std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const = 0;
};

/// Embeds `texts` and checks the backend contract: one finite vector of the
/// backend's dimension per input, in input order.
inline std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts, const EmbeddingBackend& backend) {
  auto out = backend.embed(texts);
  if (out.size() != texts.size()) {
    throw ContractError(backend.kind() + " backend returned " + std::to_string(out.size()) + " vectors for " +
                        std::to_string(texts.size()) + " texts");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out[i].size() != backend.dim()) {
      throw ContractError(backend.kind() + " backend returned a vector of length " + std::to_string(out[i].size()) +
                          ", expected " + std::to_string(backend.dim()));
    }
    for (double v : out[i]) {
      if (!std::isfinite(v)) throw ContractError(backend.kind() + " backend returned a non-finite value");
    }
  }
  return out;
}

/// Seeded pseudo-random unit vectors. The seed is the hash of the normalized
/// text, so equal texts map to equal vectors in every process.
class FallbackEmbedder final : public EmbeddingBackend {
 public:
  explicit FallbackEmbedder(std::size_t dim = kDefaultEmbeddingDim) : dim_(dim) {
    if (dim == 0) throw ConfigError("embedding dimension must be positive");
  }

  std::size_t dim() const override { return dim_; }
  std::string kind() const override { return "fallback"; }

  EmbeddingVector embed_one(std::string_view text) const {
    std::uint64_t state = stable_hash(normalize_text(text));
    auto next = [&state] {
      // splitmix64
      std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
      return z ^ (z >> 31);
    };
    auto uniform = [&] { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; };
    EmbeddingVector v(dim_);
    for (std::size_t i = 0; i < dim_; i += 2) {
      const double r = std::sqrt(-2.0 * std::log(uniform()));
      const double theta = 2.0 * 3.14159265358979323846 * uniform();
      v[i] = r * std::cos(theta);
      if (i + 1 < dim_) v[i + 1] = r * std::sin(theta);
    }
    const double norm = std::sqrt(dot(v, v));
    for (auto& x : v) x /= norm;
    return v;
  }

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

 private:
  std::size_t dim_;
};

/// Looks sentences up by `text_key` in a precomputed store.
class StoreEmbedder final : public EmbeddingBackend {
 public:
  explicit StoreEmbedder(std::shared_ptr<const VectorStore> store) : store_(std::move(store)) {
    if (!store_) throw ConfigError("store backend needs a vector store");
  }

  std::size_t dim() const override { return store_->dim(); }
  std::string kind() const override { return "store"; }

  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    std::vector<std::string> missing;
    for (const auto& t : texts) {
      const auto* v = store_->find(text_key(t));
      if (!v) {
        missing.push_back(t);
        continue;
      }
      out.emplace_back(v->begin(), v->end());
    }
    if (!missing.empty()) {
      std::string msg = std::to_string(missing.size()) + " text(s) missing from vector store:";
      for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += "\n  \"" + missing[i] + "\"";
      if (missing.size() > 10) msg += "\n  ...";
      throw MissingKeyError(msg);
    }
    return out;
  }

 private:
  std::shared_ptr<const VectorStore> store_;
};

}  // namespace checkworthy
