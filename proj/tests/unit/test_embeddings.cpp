#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "checkworthy/embeddings.hpp"
#include "checkworthy/embeddings_http.hpp"
#include "support/stub_server.hpp"
#include "support/temp_dir.hpp"

using namespace checkworthy;
using testutil::StubEmbedServer;
using testutil::TempDir;

namespace {

constexpr std::size_t kDim = 16;

const std::vector<std::string> kTexts = {"We created 8 million jobs.", "Thank you.", "", "Ünïcödé text", "Thank you."};

// A backend plus whatever it needs kept alive (store, server).
struct Fixture {
  std::shared_ptr<void> keepalive;
  std::unique_ptr<EmbeddingBackend> backend;
};

Fixture make_fallback() { return {nullptr, std::make_unique<FallbackEmbedder>(kDim)}; }

Fixture make_store() {
  auto store = std::make_shared<VectorStore>(kDim);
  FallbackEmbedder seed(kDim);
  for (const auto& t : kTexts) {
    auto v = seed.embed_one(t + "#");
    store->put(text_key(t), std::vector<float>(v.begin(), v.end()));
  }
  return {store, std::make_unique<StoreEmbedder>(store)};
}

Fixture make_http() {
  auto server = std::make_shared<StubEmbedServer>(StubEmbedServer::echo_lengths(kDim));
  HttpEmbedderConfig cfg;
  cfg.url = server->url();
  cfg.dim = kDim;
  cfg.batch_size = 2;
  cfg.parallelism = 2;
  return {server, std::make_unique<HttpEmbedder>(cfg)};
}

struct BackendCase {
  const char* name;
  Fixture (*make)();
};

class BackendContract : public ::testing::TestWithParam<BackendCase> {};

}  // namespace

TEST_P(BackendContract, OneVectorPerTextInOrder) {
  auto fx = GetParam().make();
  auto all = embed_batch(kTexts, *fx.backend);
  ASSERT_EQ(all.size(), kTexts.size());
  for (std::size_t i = 0; i < kTexts.size(); ++i) {
    EXPECT_EQ(all[i].size(), fx.backend->dim());
    auto single = embed_batch({kTexts[i]}, *fx.backend);
    EXPECT_EQ(single[0], all[i]) << i;
  }
  EXPECT_EQ(all[1], all[4]);
}

TEST_P(BackendContract, ReversedInputReversesOutput) {
  auto fx = GetParam().make();
  auto fwd = embed_batch(kTexts, *fx.backend);
  std::vector<std::string> rev(kTexts.rbegin(), kTexts.rend());
  auto back = embed_batch(rev, *fx.backend);
  for (std::size_t i = 0; i < kTexts.size(); ++i) EXPECT_EQ(back[i], fwd[kTexts.size() - 1 - i]);
}

TEST_P(BackendContract, EmptyBatch) {
  auto fx = GetParam().make();
  EXPECT_TRUE(embed_batch({}, *fx.backend).empty());
}

INSTANTIATE_TEST_SUITE_P(AllBackends, BackendContract,
                         ::testing::Values(BackendCase{"fallback", make_fallback}, BackendCase{"store", make_store},
                                           BackendCase{"http", make_http}),
                         [](const auto& info) { return std::string(info.param.name); });

TEST(Fallback, UnitNormAndStableAcrossInstances) {
  FallbackEmbedder a(64), b(64);
  auto va = a.embed_one("Hello  World");
  EXPECT_NEAR(dot(va, va), 1.0, 1e-12);
  EXPECT_EQ(va, b.embed_one("Hello World"));
  EXPECT_NE(va, a.embed_one("Goodbye world"));
  FallbackEmbedder odd(7);
  EXPECT_EQ(odd.embed_one("x").size(), 7u);
  EXPECT_THROW(FallbackEmbedder(0), ConfigError);
}

TEST(Fallback, KnownHashValue) {
  // FNV-1a 64 of "a"
  EXPECT_EQ(stable_hash("a"), 0xaf63dc4c8601ec8cull);
  EXPECT_EQ(text_key("a"), "af63dc4c8601ec8c");
  EXPECT_EQ(text_key("  a "), text_key("a"));
}

TEST(Store, MissingKeyNamesText) {
  auto store = std::make_shared<VectorStore>(2);
  StoreEmbedder e(store);
  try {
    e.embed({"absent sentence"});
    FAIL();
  } catch (const MissingKeyError& err) {
    EXPECT_NE(std::string(err.what()).find("absent sentence"), std::string::npos);
  }
}

TEST(Store, PutRejectsWrongLength) {
  VectorStore s(3);
  EXPECT_THROW(s.put("k", {1.0f}), ContractError);
}

TEST(VectorFile, RoundTripIsExact) {
  TempDir tmp;
  VectorStore s(3);
  s.put("alpha", {1.5f, -0.25f, 3e-8f});
  s.put("beta", {0.0f, 1.0f, -1.0f});
  s.put("", {2.0f, 2.0f, 2.0f});
  save_vector_file(s, tmp / "v.bin");
  EXPECT_EQ(load_vector_file(tmp / "v.bin"), s);
  EXPECT_EQ(encode_vector_store(load_vector_file(tmp / "v.bin")), encode_vector_store(s));
}

TEST(VectorFile, LayoutIsLittleEndian) {
  VectorStore s(1);
  s.put("k", {1.0f});
  const auto bytes = encode_vector_store(s);
  const std::string expected("CLRK\x01\x00\x00\x00\x01\x00\x00\x00\x01\x00\x00\x00\x00\x00\x00\x00\x01\x00k\x00\x00\x80\x3f",
                             4 + 4 + 4 + 8 + 2 + 1 + 4);
  EXPECT_EQ(bytes, expected);
}

TEST(VectorFile, CorruptInputs) {
  VectorStore s(2);
  s.put("k", {1.0f, 2.0f});
  auto bytes = encode_vector_store(s);
  EXPECT_THROW(decode_vector_store("XXXX" + bytes.substr(4), "f"), FormatError);
  auto badver = bytes;
  badver[4] = 9;
  EXPECT_THROW(decode_vector_store(badver, "f"), FormatError);
  EXPECT_THROW(decode_vector_store(bytes.substr(0, bytes.size() - 3), "f"), FormatError);
  EXPECT_THROW(decode_vector_store(bytes + "z", "f"), FormatError);
  EXPECT_THROW(decode_vector_store("CL", "f"), FormatError);
}

TEST(Nearest, KnownNeighbor) {
  VectorStore s(2);
  s.put("tax", {1.0f, 0.0f});
  s.put("taxes", {0.9f, 0.1f});
  s.put("war", {0.0f, 1.0f});
  auto n = nearest_word("tax", s, true);
  EXPECT_EQ(n.word, "taxes");
  EXPECT_EQ(nearest_word("tax", s, false).word, "tax");
  EXPECT_NEAR(nearest_word("tax", s, false).similarity, 1.0, 1e-12);
  EXPECT_THROW(nearest_word("nope", s, true), MissingKeyError);
}

TEST(Nearest, TiesAreLexicographic) {
  VectorStore s(2);
  s.put("q", {1.0f, 0.0f});
  s.put("b", {1.0f, 1.0f});
  s.put("a", {1.0f, -1.0f});
  auto ns = nearest_words("q", s, 2, true);
  ASSERT_EQ(ns.size(), 2u);
  EXPECT_EQ(ns[0].word, "a");
  EXPECT_EQ(ns[1].word, "b");
}

TEST(Nearest, SingleEntryStore) {
  VectorStore s(2);
  s.put("only", {1.0f, 0.0f});
  EXPECT_THROW(nearest_word("only", s, true), ContractError);
  EXPECT_EQ(nearest_word("only", s, false).word, "only");
}

TEST(Cosine, ZeroVectorIsZero) {
  std::vector<double> z = {0, 0}, a = {1, 2};
  EXPECT_EQ(cosine<double>(z, a), 0.0);
}

namespace {

class WrongDim final : public EmbeddingBackend {
 public:
  std::size_t dim() const override { return 4; }
  std::string kind() const override { return "test"; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override {
    return std::vector<EmbeddingVector>(texts.size(), EmbeddingVector(3, 0.0));
  }
};

class DropsOne final : public EmbeddingBackend {
 public:
  std::size_t dim() const override { return 2; }
  std::string kind() const override { return "test"; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override {
    return std::vector<EmbeddingVector>(texts.empty() ? 0 : texts.size() - 1, EmbeddingVector(2, 0.0));
  }
};

}  // namespace

TEST(EmbedBatch, EnforcesContract) {
  EXPECT_THROW(embed_batch({"a"}, WrongDim()), ContractError);
  EXPECT_THROW(embed_batch({"a", "b"}, DropsOne()), ContractError);
}

TEST(Http, WrongDimensionIsTransportError) {
  StubEmbedServer server(StubEmbedServer::echo_lengths(3));
  HttpEmbedderConfig cfg;
  cfg.url = server.url();
  cfg.dim = 4;
  HttpEmbedder e(cfg);
  EXPECT_THROW(e.embed({"a"}), TransportError);
}

TEST(Http, ServerErrorRetriesThenFails) {
  StubEmbedServer server([](const std::vector<std::string>&) { return std::make_pair(503, std::string("{}")); });
  HttpEmbedderConfig cfg;
  cfg.url = server.url();
  cfg.dim = 2;
  cfg.retries = 2;
  HttpEmbedder e(cfg);
  try {
    e.embed({"a"});
    FAIL();
  } catch (const TransportError& err) {
    EXPECT_EQ(err.attempts(), 3);
    EXPECT_EQ(err.exit_code(), 4);
  }
  EXPECT_EQ(server.requests(), 3);
}

TEST(Http, ClientErrorIsNotRetried) {
  StubEmbedServer server([](const std::vector<std::string>&) { return std::make_pair(400, std::string("{}")); });
  HttpEmbedderConfig cfg;
  cfg.url = server.url();
  cfg.dim = 2;
  HttpEmbedder e(cfg);
  EXPECT_THROW(e.embed({"a"}), TransportError);
  EXPECT_EQ(server.requests(), 1);
}

TEST(Http, TransientFailureRecovers) {
  std::atomic<int> calls{0};
  auto ok = StubEmbedServer::echo_lengths(2);
  StubEmbedServer server([&](const std::vector<std::string>& t) {
    if (calls++ == 0) return std::make_pair(502, std::string("{}"));
    return ok(t);
  });
  HttpEmbedderConfig cfg;
  cfg.url = server.url();
  cfg.dim = 2;
  HttpEmbedder e(cfg);
  auto v = e.embed({"abc"});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], (EmbeddingVector{3.0, 6.0}));
}

TEST(Http, MalformedBodyAndCountMismatch) {
  StubEmbedServer bad([](const std::vector<std::string>&) { return std::make_pair(200, std::string("not json")); });
  HttpEmbedderConfig cfg;
  cfg.url = bad.url();
  cfg.dim = 2;
  EXPECT_THROW(HttpEmbedder(cfg).embed({"a"}), TransportError);

  StubEmbedServer short_server([](const std::vector<std::string>&) {
    return std::make_pair(200, std::string(R"({"vectors": []})"));
  });
  cfg.url = short_server.url();
  EXPECT_THROW(HttpEmbedder(cfg).embed({"a"}), TransportError);
}

TEST(Http, UnreachableService) {
  HttpEmbedderConfig cfg;
  cfg.url = "http://127.0.0.1:1";
  cfg.dim = 2;
  cfg.retries = 1;
  cfg.timeout_ms = 500;
  try {
    HttpEmbedder(cfg).embed({"a"});
    FAIL();
  } catch (const TransportError& err) {
    EXPECT_EQ(err.attempts(), 2);
  }
}

TEST(Http, ConfigValidation) {
  HttpEmbedderConfig cfg;
  EXPECT_THROW(HttpEmbedder{cfg}, ConfigError);
  cfg.url = "http://x";
  cfg.parallelism = 0;
  EXPECT_THROW(HttpEmbedder{cfg}, ConfigError);
}

TEST(Http, ManyBatchesStitchInOrder) {
  StubEmbedServer server(StubEmbedServer::echo_lengths(1));
  HttpEmbedderConfig cfg;
  cfg.url = server.url();
  cfg.dim = 1;
  cfg.batch_size = 3;
  cfg.parallelism = 4;
  HttpEmbedder e(cfg);
  std::vector<std::string> texts;
  for (int i = 0; i < 40; ++i) texts.push_back(std::string(static_cast<std::size_t>(i), 'x'));
  auto v = e.embed(texts);
  ASSERT_EQ(v.size(), texts.size());
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(v[i][0], static_cast<double>(i));
  EXPECT_EQ(server.requests(), 14);
}
