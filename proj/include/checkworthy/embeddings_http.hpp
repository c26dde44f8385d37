#pragma once

// Client for an external sentence-embedding service.
//
//   POST <base>/embed   {"texts": ["...", ...]}
//   200                 {"vectors": [[...], ...]}   one dim-length array per text
//
// Anything else is a TransportError. Connection failures and 5xx answers are
// retried; malformed bodies are not.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <future>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "checkworthy/embeddings.hpp"
#include "checkworthy/error.hpp"

namespace checkworthy {

inline constexpr const char* kEmbedUrlEnv = "CHECKWORTHY_EMBED_URL";

struct HttpEmbedderConfig {
  std::string url;
  std::size_t dim = kDefaultEmbeddingDim;
  int timeout_ms = 10000;
  int retries = 2;
  int parallelism = 4;
  std::size_t batch_size = 64;
};

class HttpEmbedder final : public EmbeddingBackend {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.url.empty()) throw ConfigError("HTTP embedding backend needs a service URL");
    if (cfg_.dim == 0) throw ConfigError("embedding dimension must be positive");
    if (cfg_.parallelism < 1 || cfg_.batch_size < 1) throw ConfigError("parallelism and batch size must be >= 1");
    auto scheme = cfg_.url.find("://");
    auto path_start = cfg_.url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
      origin_ = cfg_.url;
    } else {
      origin_ = cfg_.url.substr(0, path_start);
      path_prefix_ = cfg_.url.substr(path_start);
      while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    }
  }

  std::size_t dim() const override { return cfg_.dim; }
  std::string kind() const override { return "http"; }
  const HttpEmbedderConfig& config() const noexcept { return cfg_; }

  /// Batches are sent with at most `parallelism` requests in flight; results
  /// are stitched back in input order.
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override {
    std::vector<EmbeddingVector> out(texts.size());
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t b = 0; b < texts.size(); b += cfg_.batch_size) {
      batches.emplace_back(b, std::min(texts.size(), b + cfg_.batch_size));
    }
    for (std::size_t wave = 0; wave < batches.size(); wave += static_cast<std::size_t>(cfg_.parallelism)) {
      const auto wave_end = std::min(batches.size(), wave + static_cast<std::size_t>(cfg_.parallelism));
      std::vector<std::future<std::vector<EmbeddingVector>>> inflight;
      for (std::size_t i = wave; i < wave_end; ++i) {
        auto [lo, hi] = batches[i];
        std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(lo),
                                       texts.begin() + static_cast<std::ptrdiff_t>(hi));
        inflight.push_back(std::async(std::launch::async, [this, chunk = std::move(chunk)] { return post(chunk); }));
      }
      for (std::size_t i = wave; i < wave_end; ++i) {
        auto vecs = inflight[i - wave].get();
        std::move(vecs.begin(), vecs.end(), out.begin() + static_cast<std::ptrdiff_t>(batches[i].first));
      }
    }
    return out;
  }

 private:
  std::vector<EmbeddingVector> post(const std::vector<std::string>& texts) const {
    const std::string body = nlohmann::json{{"texts", texts}}.dump();
    const std::string path = path_prefix_ + "/embed";
    const int attempts = 1 + std::max(0, cfg_.retries);
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      httplib::Client cli(origin_);
      const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
      cli.set_connection_timeout(timeout);
      cli.set_read_timeout(timeout);
      cli.set_write_timeout(timeout);
      auto res = cli.Post(path, body, "application/json");
      if (!res) {
        last_error = "embedding service " + origin_ + " unreachable: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "embedding service returned HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) {
        throw TransportError("embedding service returned HTTP " + std::to_string(res->status), attempt);
      }
      return parse_response(res->body, texts.size(), attempt);
    }
    throw TransportError(last_error, attempts);
  }

  std::vector<EmbeddingVector> parse_response(const std::string& body, std::size_t expected, int attempt) const {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed embedding response: ") + e.what(), attempt);
    }
    if (!doc.is_object() || !doc.contains("vectors") || !doc["vectors"].is_array()) {
      throw TransportError("malformed embedding response: missing 'vectors' array", attempt);
    }
    const auto& arr = doc["vectors"];
    if (arr.size() != expected) {
      throw TransportError("embedding service returned " + std::to_string(arr.size()) + " vectors for " +
                               std::to_string(expected) + " texts",
                           attempt);
    }
    std::vector<EmbeddingVector> out;
    out.reserve(expected);
    for (const auto& v : arr) {
      if (!v.is_array() || v.size() != cfg_.dim) {
        throw TransportError("embedding service returned a vector of length " +
                                 std::to_string(v.is_array() ? v.size() : 0) + ", expected " + std::to_string(cfg_.dim),
                             attempt);
      }
      EmbeddingVector vec;
      vec.reserve(cfg_.dim);
      for (const auto& x : v) {
        if (!x.is_number() || !std::isfinite(x.get<double>())) {
          throw TransportError("embedding service returned a non-numeric or non-finite value", attempt);
        }
        vec.push_back(x.get<double>());
      }
      out.push_back(std::move(vec));
    }
    return out;
  }

  HttpEmbedderConfig cfg_;
  std::string origin_;
  std::string path_prefix_;
};

/// Service URL from the environment, or empty.
inline std::string embed_url_from_env() {
  const char* v = std::getenv(kEmbedUrlEnv);
  return v ? std::string(v) : std::string();
}

}  // namespace checkworthy
