// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "checkworthy/config.hpp"
#include "checkworthy/embeddings.hpp"
#include "checkworthy/embeddings_http.hpp"
#include "checkworthy/eval.hpp"
#include "checkworthy/gbrt.hpp"
#include "checkworthy/pipeline.hpp"
#include "checkworthy/sentiment.hpp"
#include "checkworthy/synthetic.hpp"
#include "checkworthy/topics.hpp"
#include "support/metric_oracle.hpp"
#include "support/stub_server.hpp"
#include "support/temp_dir.hpp"

using namespace checkworthy;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects the first few failure messages of a criterion.
struct Check {
  bool ok = true;
  std::ostringstream why;
  int reported = 0;

  void expect(bool cond, const std::string& msg) {
    if (cond) return;
    ok = false;
    if (reported++ < 3) why << (reported > 1 ? "; " : "") << msg;
  }
};

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

// --- metrics ---------------------------------------------------------------

Outcome metric_oracle_equivalence() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20190909);
  Check c;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 50);
    Ranking r(static_cast<std::size_t>(n));
    std::iota(r.begin(), r.end(), 1);
    std::shuffle(r.begin(), r.end(), rng);
    QueryJudgments j{"q", {}};
    const int rate = 2 + static_cast<int>(rng() % 6);
    for (int line = 1; line <= n; ++line) {
      if (rng() % static_cast<unsigned>(rate) == 0) j.relevant.insert(line);
    }
    const auto got = evaluate_query(r, j);
    const auto want = oracle::score(r, j.relevant);
    const double pairs[][2] = {{got.ap, want.ap},        {got.rr, want.rr},        {got.r_prec, want.rp},
                               {got.p_at[0], want.p1},   {got.p_at[1], want.p3},   {got.p_at[2], want.p5},
                               {got.p_at[3], want.p10},  {got.p_at[4], want.p20},  {got.p_at[5], want.p50}};
    for (const auto& p : pairs) worst = std::max(worst, std::abs(p[0] - p[1]));
  }
  const double secs = seconds_since(t0);
  c.expect(worst <= 1e-12, "max abs diff " + std::to_string(worst));
  c.expect(secs < 5.0, "runtime " + std::to_string(secs) + " s");
  std::ostringstream d;
  d << "1000 instances, max |diff| = " << worst << ", " << secs << " s";
  return {c.ok, c.ok ? d.str() : c.why.str()};
}

Outcome metric_endpoints() {
  Check c;
  QueryJudgments perfect{"p", {1, 2, 3}};
  Ranking r = {1, 2, 3, 4, 5, 6};
  const auto q = evaluate_query(r, perfect);
  c.expect(q.ap == 1.0 && q.rr == 1.0 && q.r_prec == 1.0, "perfect ranking not exactly 1");
  auto rep = evaluate_run({{"p", r}}, {{"p", perfect}});
  c.expect(rep.at("MAP") == 1.0 && rep.at("RR") == 1.0 && rep.at("R-P") == 1.0, "perfect run MAP/RR/R-P not 1");

  QueryJudgments none{"z", {}};
  const auto z = evaluate_query(r, none);
  c.expect(z.no_relevant, "no-relevant flag not set");
  c.expect(z.ap == 0.0 && z.rr == 0.0 && z.r_prec == 0.0, "AP/RR/R-P not 0 for all-irrelevant");
  for (double p : z.p_at) c.expect(p == 0.0, "P@N not 0 for all-irrelevant");
  auto zrep = evaluate_run({{"z", r}}, {{"z", none}});
  c.expect(zrep.no_relevant_queries == std::vector<std::string>{"z"}, "run report does not flag the query");
  for (const auto& m : metric_names()) c.expect(zrep.at(m) == 0.0, m + " not 0");
  return {c.ok, c.ok ? "perfect = 1 exactly; all-irrelevant = 0 and flagged" : c.why.str()};
}

Outcome ablation_arithmetic() {
  Check c;
  const auto& t = reference::kFeatureAblation;
  const double base = t[0].values[0];
  struct Want {
    std::size_t row;
    const char* text;
  };
  std::string got_all;
  for (const Want& w : {Want{7, "+57.91%"}, Want{4, "+45.58%"}, Want{6, "+20.24%"}}) {
    const auto got = format_delta(percent_delta(base, t[w.row].values[0]));
    c.expect(got == w.text, std::string(t[w.row].name) + ": " + got + " != " + w.text);
    got_all += (got_all.empty() ? "" : ", ") + got;
  }
  std::vector<AblationRow> rows;
  for (const auto& p : t) rows.push_back(reference::to_row(p));
  const auto text = ablation_report(rows).to_text();
  c.expect(text.find("+57.91%") != std::string::npos, "table text lacks +57.91%");
  return {c.ok, c.ok ? "MAP deltas " + got_all : c.why.str()};
}

// --- GBRT ------------------------------------------------------------------

Outcome gbrt_correctness() {
  Check c;
  {  // (a) constant target
    TrainingSet data(3);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-5, 5);
    for (int i = 0; i < 50; ++i) data.add(std::vector<double>{u(rng), u(rng), u(rng)}, 0.375);
    const auto m = fit_gbrt(data, {});
    for (int i = 0; i < 20; ++i) {
      const double p = m.predict(std::vector<double>{u(rng), u(rng), u(rng)});
      c.expect(p == 0.375, "(a) constant fit predicted " + std::to_string(p));
    }
  }
  {  // (b) 1-D threshold, one 2-leaf tree, lr = 1
    TrainingSet data(1);
    for (int i = 0; i < 40; ++i) data.add(std::vector<double>{0.25 * i}, i >= 20 ? 1.0 : 0.0);
    GbrtConfig cfg;
    cfg.n_trees = 1;
    cfg.n_leaves = 2;
    cfg.learning_rate = 1.0;
    const auto m = fit_gbrt(data, cfg);
    c.expect(m.trees.size() == 1 && m.trees[0].leaf_count() == 2, "(b) expected one 2-leaf tree");
    for (std::size_t i = 0; i < data.rows(); ++i) {
      c.expect(m.predict(data.row(i)) == data.target(i), "(b) row " + std::to_string(i) + " not fit exactly");
    }
  }
  {  // (c) training MSE non-increasing over 50 stages
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> g(0.0, 1.0);
      const std::size_t f = 2 + seed % 5;
      TrainingSet data(f);
      std::vector<double> x(f);
      for (int i = 0; i < 150; ++i) {
        for (auto& v : x) v = g(rng);
        data.add(x, std::sin(x[0]) + 0.5 * x[1] * x[1 % f] + 0.3 * g(rng));
      }
      GbrtConfig cfg;
      cfg.n_trees = 50;
      cfg.n_leaves = 2 + static_cast<int>(seed % 6);
      const auto m = fit_gbrt(data, cfg);
      c.expect(m.stage_mse.size() == 51, "(c) seed " + std::to_string(seed) + " stopped after " +
                                             std::to_string(m.stage_mse.size() - 1) + " stages");
      for (std::size_t s = 1; s < m.stage_mse.size(); ++s) {
        c.expect(m.stage_mse[s] <= m.stage_mse[s - 1], "(c) seed " + std::to_string(seed) + " stage " + std::to_string(s) +
                                                           " MSE rose");
      }
    }
  }
  {  // (d) bundle round trip, bit-identical on 100 probe rows
    PipelineConfig cfg;
    cfg.embedding.dim = 16;
    cfg.topics.k = 5;
    cfg.topics.iterations = 50;
    cfg.bigram_threshold = 3;
    cfg.gbrt.n_leaves = 4;
    FallbackEmbedder backend(16);
    const auto corpus = synthetic::generate({.debates = 3, .sentences = 80, .seed = 5});
    const auto model = train_model(corpus, cfg, &backend);
    testutil::TempDir tmp;
    save_bundle(model, tmp / "model.bin");
    const auto back = load_bundle(tmp / "model.bin");
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int same = 0;
    for (int i = 0; i < 100; ++i) {
      FeatureVector fv;
      for (std::size_t k = 0; k < model.manifest.size(); ++k) fv.values.push_back(u(rng));
      same += bit_equal(predict(model, fv), predict(back, fv));
    }
    c.expect(same == 100, "(d) " + std::to_string(100 - same) + " probe rows differ after reload");
  }
  return {c.ok, c.ok ? "(a) constant, (b) stump, (c) 20 x 50 stages monotone, (d) 100/100 bit-identical" : c.why.str()};
}

// --- LDA -------------------------------------------------------------------

std::vector<TokenList> disjoint_corpus(std::uint64_t seed) {
  static const std::vector<std::string> a = {"tax", "jobs", "wages", "economy", "trade", "budget", "debt", "growth", "income", "deficit"};
  static const std::vector<std::string> b = {"war", "troops", "border", "nuclear", "iran", "army", "missile", "terror", "allies", "navy"};
  std::mt19937_64 rng(seed);
  std::vector<TokenList> docs;
  for (int d = 0; d < 200; ++d) {
    const auto& v = d % 2 == 0 ? a : b;
    TokenList t;
    for (int i = 0; i < 10; ++i) t.push_back(v[rng() % v.size()]);
    docs.push_back(std::move(t));
  }
  return docs;
}

Outcome lda_checks() {
  const auto t0 = Clock::now();
  Check c;
  {  // K = 1 closed form
    std::vector<TokenList> docs = {{"a", "b", "a", "c"}, {"a", "d"}, {"b", "b", "e"}, {"c"}};
    LdaParams p;
    p.topics = 1;
    p.iterations = 50;
    const auto m = fit_lda(docs, p);
    std::map<std::string, int> counts;
    int total = 0;
    for (const auto& d : docs) {
      for (const auto& w : d) {
        ++counts[w];
        ++total;
      }
    }
    const double vb = static_cast<double>(counts.size()) * p.beta;
    for (const auto& [w, n] : counts) {
      const double want = (n + p.beta) / (total + vb);
      c.expect(std::abs(m.prob(0, *m.dictionary.id(w)) - want) <= 1e-9, "K=1 phi(" + w + ") off");
    }
  }
  int pure_seeds = 0;
  double min_purity = 1.0;
  {  // purity at K = 2 with default hyperparameters
    static const std::set<std::string> a = {"tax", "jobs", "wages", "economy", "trade", "budget", "debt", "growth", "income", "deficit"};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      LdaParams p;
      p.topics = 2;
      p.seed = seed;
      const auto m = fit_lda(disjoint_corpus(seed), p);
      double purity = 0.0;
      std::set<bool> majorities;
      for (int k = 0; k < 2; ++k) {
        int in_a = 0;
        for (const auto& w : top_words(m, k, 10)) in_a += a.count(w.word) ? 1 : 0;
        purity += std::max(in_a, 10 - in_a) / 10.0 / 2.0;
        majorities.insert(in_a * 2 > 10);
      }
      min_purity = std::min(min_purity, purity);
      if (purity >= 0.9 && majorities.size() == 2) ++pure_seeds;
    }
    c.expect(pure_seeds >= 19, "purity >= 0.9 on only " + std::to_string(pure_seeds) + "/20 seeds");
  }
  {  // fixed-seed refit is bit-identical
    LdaParams p;
    p.topics = 4;
    p.seed = 11;
    p.iterations = 200;
    const auto docs = disjoint_corpus(3);
    const auto m1 = fit_lda(docs, p), m2 = fit_lda(docs, p);
    bool same = m1.phi.size() == m2.phi.size();
    for (std::size_t i = 0; same && i < m1.phi.size(); ++i) same = bit_equal(m1.phi[i], m2.phi[i]);
    c.expect(same, "refit differs");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 30.0, "runtime " + std::to_string(secs) + " s");
  std::ostringstream d;
  d << "K=1 closed form; purity >= 0.9 on " << pure_seeds << "/20 seeds (min " << min_purity << "); refit identical; "
    << secs << " s";
  return {c.ok, c.ok ? d.str() : c.why.str()};
}

// --- sentiment -------------------------------------------------------------

Outcome sentiment_checks() {
  Check c;
  const auto& lex = default_lexicon();
  SentimentLexicon flipped;
  for (const auto& [w, v] : lex.entries) flipped.entries[w] = -v;
  std::vector<std::string> pool;
  for (const auto& [w, v] : lex.entries) pool.push_back(w);
  for (const char* w : {"tax", "people", "the", "percent", "2016", "jobs", "country"}) pool.push_back(w);
  std::mt19937_64 rng(4242);
  double worst = 0.0;
  int asym = 0;
  for (int i = 0; i < 10000; ++i) {
    TokenList t;
    const auto n = rng() % 25;
    for (std::size_t k = 0; k < n; ++k) t.push_back(pool[rng() % pool.size()]);
    const auto s = score_sentence(t, lex);
    const auto f = score_sentence(t, flipped);
    worst = std::max(worst, std::abs(s.neg + s.neu + s.pos - 1.0));
    c.expect(s.neg >= 0 && s.neu >= 0 && s.pos >= 0, "negative proportion");
    if (!(s.pos == f.neg && s.neg == f.pos && s.neu == f.neu)) ++asym;
  }
  c.expect(worst <= 1e-12, "sum deviates by " + std::to_string(worst));
  c.expect(asym == 0, std::to_string(asym) + " sentences break negation symmetry");
  std::ostringstream d;
  d << "10000 sentences, max |sum - 1| = " << worst << ", negation exact";
  return {c.ok, c.ok ? d.str() : c.why.str()};
}

// --- end to end ------------------------------------------------------------

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

Outcome end_to_end() {
  Check c;
  testutil::TempDir tmp;
  // all blocks, fallback embedder at D = 64; bigram threshold scaled to a 500-sentence corpus
  io::write_file((tmp / "config.json").string(),
                 R"({"features": "all", "embedding": {"backend": "fallback", "dim": 64},
                     "bigrams": {"threshold": 5}, "rules": [], "seed": 42})");
  auto synth = testutil::run_cli("synth -o " + q(tmp / "train") + " --debates 5 --sentences 100 --seed 101");
  auto synth2 = testutil::run_cli("synth -o " + q(tmp / "test") + " --debates 5 --sentences 100 --seed 202 --prefix heldout");
  c.expect(synth.exit_code == 0 && synth2.exit_code == 0, "synth failed: " + synth.output + synth2.output);
  if (!c.ok) return {false, c.why.str()};

  double first_secs = 0.0;
  std::vector<std::string> outputs;
  for (int pass = 0; pass < 2; ++pass) {
    const auto t0 = Clock::now();
    const auto dir = tmp / ("pass" + std::to_string(pass));
    fs::create_directories(dir);
    auto tr = testutil::run_cli("train -c " + q(tmp / "config.json") + " --train-dir " + q(tmp / "train") + " -o " +
                                q(dir / "model.bin"));
    auto rk = testutil::run_cli("rank -c " + q(tmp / "config.json") + " -m " + q(dir / "model.bin") + " -i " +
                                q(tmp / "test") + " -o " + q(dir / "runs"));
    auto ev = testutil::run_cli("evaluate -g " + q(tmp / "test") + " -r " + q(dir / "runs") + " --json " +
                                q(dir / "metrics.json"));
    if (pass == 0) first_secs = seconds_since(t0);
    c.expect(tr.exit_code == 0, "train exit " + std::to_string(tr.exit_code) + ": " + tr.output);
    c.expect(rk.exit_code == 0, "rank exit " + std::to_string(rk.exit_code) + ": " + rk.output);
    c.expect(ev.exit_code == 0, "evaluate exit " + std::to_string(ev.exit_code) + ": " + ev.output);
    if (!c.ok) return {false, c.why.str()};
    std::string blob = io::read_file((dir / "model.bin").string()) + io::read_file((dir / "metrics.json").string());
    for (const auto& f : list_tsv_files(dir / "runs")) blob += io::read_file(f.string());
    outputs.push_back(blob);
  }
  c.expect(outputs[0] == outputs[1], "two invocations produced different model/runs/metrics");
  c.expect(first_secs < 60.0, "train+rank+evaluate took " + std::to_string(first_secs) + " s");

  const auto metrics = nlohmann::json::parse(io::read_file((tmp / "pass0" / "metrics.json").string()));
  const double map = metrics["metrics"]["MAP"].get<double>();

  const auto gold = load_debate_dir(tmp / "test", true);
  std::map<std::string, QueryJudgments> judgments;
  for (const auto& d : gold) judgments[d.debate_id] = judgments_from_debate(d);
  std::mt19937_64 rng(9001);
  double random_sum = 0.0;
  for (int p = 0; p < 100; ++p) {
    std::map<std::string, Ranking> rankings;
    for (const auto& d : gold) {
      Ranking r;
      for (const auto& rec : d.records) r.push_back(rec.line_number);
      std::shuffle(r.begin(), r.end(), rng);
      rankings[d.debate_id] = r;
    }
    random_sum += evaluate_run(rankings, judgments).at("MAP");
  }
  const double random_map = random_sum / 100.0;
  c.expect(map >= 2.0 * random_map, "MAP " + std::to_string(map) + " < 2 x random " + std::to_string(random_map));
  std::ostringstream d;
  d << "MAP " << format_metric(map) << " vs random " << format_metric(random_map) << " (" << (map / random_map)
    << "x); deterministic; " << first_secs << " s";
  return {c.ok, c.ok ? d.str() : c.why.str()};
}

// --- embedding backends ----------------------------------------------------

class ShortVectors final : public EmbeddingBackend {
 public:
  std::size_t dim() const override { return 8; }
  std::string kind() const override { return "fallback"; }
  std::vector<EmbeddingVector> embed(const std::vector<std::string>& texts) const override {
    return std::vector<EmbeddingVector>(texts.size(), EmbeddingVector(7, 0.5));
  }
};

Outcome embedding_contract() {
  Check c;
  constexpr std::size_t D = 8;
  const std::vector<std::string> texts = {"We added 2 million jobs.", "Thank you.", "", "Taxes went up 40%.", "Thank you.",
                                          "Ünïcödé", "The border is secure.", "x"};

  auto check_backend = [&](const std::string& name, const EmbeddingBackend& b) {
    const auto all = embed_batch(texts, b);
    c.expect(all.size() == texts.size(), name + ": count");
    for (const auto& v : all) c.expect(v.size() == D, name + ": dim");
    for (std::size_t i = 0; i < texts.size(); ++i) {
      c.expect(embed_batch({texts[i]}, b)[0] == all[i], name + ": order/batch consistency at " + std::to_string(i));
    }
    std::vector<std::string> rev(texts.rbegin(), texts.rend());
    const auto back = embed_batch(rev, b);
    for (std::size_t i = 0; i < texts.size(); ++i) c.expect(back[i] == all[texts.size() - 1 - i], name + ": reversed order");
    c.expect(embed_batch({}, b).empty(), name + ": empty batch");
  };

  FallbackEmbedder fallback(D);
  check_backend("fallback", fallback);

  auto store = std::make_shared<VectorStore>(D);
  for (const auto& t : texts) {
    auto v = fallback.embed_one("store:" + t);
    store->put(text_key(t), std::vector<float>(v.begin(), v.end()));
  }
  StoreEmbedder store_backend(store);
  check_backend("store", store_backend);
  bool missing = false;
  try {
    store_backend.embed({"not cached"});
  } catch (const MissingKeyError&) {
    missing = true;
  }
  c.expect(missing, "store: missing key not reported");
  bool wrong_len = false;
  try {
    store->put("bad", std::vector<float>(D - 1));
  } catch (const ContractError&) {
    wrong_len = true;
  }
  c.expect(wrong_len, "store: wrong-length vector accepted");

  bool dim_enforced = false;
  try {
    embed_batch({"a"}, ShortVectors());
  } catch (const ContractError&) {
    dim_enforced = true;
  }
  c.expect(dim_enforced, "embed_batch accepted wrong-dimension vectors");

  {
    testutil::StubEmbedServer server(testutil::StubEmbedServer::echo_lengths(D));
    HttpEmbedderConfig cfg;
    cfg.url = server.url();
    cfg.dim = D;
    cfg.batch_size = 3;
    cfg.parallelism = 2;
    HttpEmbedder http(cfg);
    check_backend("http", http);
    const auto v = http.embed(texts);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      c.expect(v[i][0] == static_cast<double>(texts[i].size()), "http: vector " + std::to_string(i) + " out of order");
    }
  }
  {
    testutil::StubEmbedServer wrong(testutil::StubEmbedServer::echo_lengths(D + 1));
    HttpEmbedderConfig cfg;
    cfg.url = wrong.url();
    cfg.dim = D;
    bool rejected = false;
    try {
      HttpEmbedder(cfg).embed({"a"});
    } catch (const TransportError&) {
      rejected = true;
    }
    c.expect(rejected, "http: wrong-dimension response accepted");
  }
  {
    testutil::TempDir tmp;
    testutil::StubEmbedServer failing([](const std::vector<std::string>&) { return std::make_pair(503, std::string("{}")); });
    testutil::StubEmbedServer refusing([](const std::vector<std::string>&) { return std::make_pair(403, std::string("{}")); });
    auto s = testutil::run_cli("synth -o " + q(tmp / "d") + " --debates 1 --sentences 10");
    c.expect(s.exit_code == 0, "synth failed");
    for (const auto* srv : {&failing, &refusing}) {
      auto r = testutil::run_cli("embed cache --embedding-dim 8 --embed-url " + srv->url() + " " + q(tmp / "d") + " -o " +
                                 q(tmp / "v.bin"));
      c.expect(r.exit_code == 4, "CLI exit " + std::to_string(r.exit_code) + " on non-200 (want 4): " + r.output);
    }
  }
  return {c.ok, c.ok ? "fallback, store, http: order, D enforcement, non-200 -> exit 4" : c.why.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracle equivalence", metric_oracle_equivalence},
      {"metric endpoints", metric_endpoints},
      {"ablation arithmetic", ablation_arithmetic},
      {"gbrt correctness", gbrt_correctness},
      {"lda", lda_checks},
      {"sentiment", sentiment_checks},
      {"end-to-end synthetic signal", end_to_end},
      {"embedding backend contract", embedding_contract},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << name << "  " << o.detail << std::endl;
    failed += o.pass ? 0 : 1;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
