// checkworthy: train, rank and evaluate check-worthiness rankers.
//
// Exit codes: 0 success, 2 usage/config error, 3 data/contract error,
// 4 embedding service error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "checkworthy/augment.hpp"
#include "checkworthy/config.hpp"
#include "checkworthy/corpus.hpp"
#include "checkworthy/embeddings.hpp"
#include "checkworthy/embeddings_http.hpp"
#include "checkworthy/eval.hpp"
#include "checkworthy/pipeline.hpp"
#include "checkworthy/ranker.hpp"
#include "checkworthy/synthetic.hpp"

namespace fs = std::filesystem;
using namespace checkworthy;

namespace {

/// Flags that override config-file values. Unset flags leave the file alone.
struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> features;
  std::optional<std::string> backend;
  std::optional<std::size_t> dim;
  std::optional<std::string> url;
  std::optional<std::string> store;
  std::optional<std::string> lexicon;
  std::optional<std::string> stoplist;
  std::optional<std::string> rules;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", config, "JSON pipeline config");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--features", features, "feature blocks, e.g. sbert,sf,tmf,bigrams");
    app->add_option("--embedding-backend", backend, "fallback | store | http");
    app->add_option("--embedding-dim", dim, "embedding dimension");
    app->add_option("--embed-url", url, "embedding service URL (overrides $" + std::string(kEmbedUrlEnv) + ")");
    app->add_option("--vector-store", store, "precomputed sentence vector file");
    app->add_option("--lexicon", lexicon, "sentiment lexicon TSV");
    app->add_option("--stoplist", stoplist, "stopword list");
    app->add_option("--rules", rules, "rerank rules, e.g. short,no_signal");
  }

  PipelineConfig resolve() const {
    PipelineConfig cfg = config.empty() ? PipelineConfig{} : load_config(config);
    if (seed) cfg.seed = *seed;
    if (features) cfg.features = FeatureBlocks::parse(*features);
    if (backend) cfg.embedding.backend = *backend;
    if (dim) cfg.embedding.dim = *dim;
    if (url) cfg.embedding.url = *url;
    if (store) cfg.embedding.store = *store;
    if (lexicon) cfg.lexicon = *lexicon;
    if (stoplist) cfg.stoplist = *stoplist;
    if (rules) {
      cfg.rules.clear();
      std::string cur;
      for (char c : *rules + ",") {
        if (c == ',') {
          if (!cur.empty()) cfg.rules.push_back(cur);
          cur.clear();
        } else if (c != ' ') {
          cur += c;
        }
      }
    }
    return cfg;
  }
};

std::unique_ptr<EmbeddingBackend> backend_for(const PipelineConfig& cfg) {
  if (!cfg.features.embedding) return nullptr;
  return make_backend(cfg.embedding);
}

void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string metrics_row(const std::string& name, const MetricsReport& rep) {
  AblationTable t = ablation_report({{name, rep}});
  return t.to_text();
}

int run_validate(const std::vector<std::string>& inputs, bool unlabeled, const std::string& json_out) {
  std::vector<Debate> debates;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (auto& d : load_debate_dir(in, !unlabeled)) debates.push_back(std::move(d));
    } else {
      debates.push_back(parse_debate_tsv(in, !unlabeled));
    }
  }
  const auto rep = validate_corpus(debates);
  std::cout << format_validation_report(rep);
  if (!json_out.empty()) {
    auto refs = [](const std::vector<LineRef>& v) {
      auto a = nlohmann::json::array();
      for (const auto& r : v) a.push_back({{"debate_id", r.debate_id}, {"line_number", r.line_number}});
      return a;
    };
    write_json({{"debates", rep.debates},
                {"sentences", rep.sentences},
                {"positives", rep.positives},
                {"negatives", rep.negatives},
                {"unlabeled", rep.unlabeled},
                {"duplicate_lines", refs(rep.duplicate_lines)},
                {"out_of_order_lines", refs(rep.out_of_order_lines)},
                {"empty_texts", refs(rep.empty_texts)}},
               json_out);
  }
  return rep.clean() ? 0 : 3;
}

int run_train(const Overrides& ov, std::string train_dir, const std::string& out) {
  auto cfg = ov.resolve();
  if (train_dir.empty()) train_dir = cfg.train_dir;
  if (train_dir.empty()) throw ConfigError("no training directory (use --train-dir or train_dir in the config)");
  const auto corpus = load_debate_dir(train_dir, true);
  auto backend = backend_for(cfg);
  const auto model = train_model(corpus, cfg, backend.get(), &std::cout);
  save_bundle(model, out);
  std::cout << "wrote " << out << '\n';
  return 0;
}

int run_rank(const Overrides& ov, const std::string& model_path, std::string input, const std::string& out_dir) {
  auto cfg = ov.resolve();
  if (input.empty()) input = cfg.test_dir;
  if (input.empty()) throw ConfigError("no input directory (use --input or test_dir in the config)");
  const auto model = load_bundle(model_path);
  std::vector<Debate> debates;
  for (const auto& f : list_tsv_files(input)) {
    // rank accepts both gold (4-column) and unlabeled (3-column) transcripts
    try {
      debates.push_back(parse_debate_tsv(f, false));
    } catch (const ParseError&) {
      debates.push_back(parse_debate_tsv(f, true));
    }
  }
  if (debates.empty()) {
    std::cerr << "warning: no .tsv transcripts in " << input << '\n';
    return 0;
  }
  std::unique_ptr<EmbeddingBackend> backend;
  if (model.blocks.embedding) backend = make_backend(cfg.embedding);
  const auto runs = rank_corpus(model, debates, cfg.rules, backend.get());
  fs::create_directories(out_dir);
  for (const auto& d : debates) write_run(d, runs.at(d.debate_id), fs::path(out_dir) / (d.debate_id + ".tsv"));
  std::cout << "wrote " << debates.size() << " run file(s) to " << out_dir << '\n';
  return 0;
}

int run_evaluate(const std::string& gold, const std::string& runs, const std::string& name, const std::string& json_out) {
  const auto rep = evaluate_dirs(gold, runs);
  std::cout << metrics_row(name, rep);
  for (const auto& q : rep.no_relevant_queries) std::cerr << "warning: " << q << " has no relevant lines\n";
  if (!json_out.empty()) write_json(report_to_json(rep), json_out);
  return 0;
}

int run_ablate(const Overrides& ov, std::string train_dir, std::string test_dir, const std::vector<std::string>& subsets,
               const std::string& json_out) {
  auto cfg = ov.resolve();
  if (train_dir.empty()) train_dir = cfg.train_dir;
  if (test_dir.empty()) test_dir = cfg.test_dir;
  if (train_dir.empty() || test_dir.empty()) throw ConfigError("ablate needs training and test directories");
  std::vector<FeatureBlocks> blocks;
  for (const auto& s : subsets) blocks.push_back(FeatureBlocks::parse(s));
  if (blocks.empty()) blocks = {FeatureBlocks::parse("bigrams"), FeatureBlocks::parse("sf"), FeatureBlocks::parse("sbert"),
                                FeatureBlocks::parse("tmf"), FeatureBlocks::all()};
  const auto train = load_debate_dir(train_dir, true);
  const auto test = load_debate_dir(test_dir, true);
  std::unique_ptr<EmbeddingBackend> backend;
  for (const auto& b : blocks) {
    if (b.embedding) backend = make_backend(cfg.embedding);
  }
  const auto table = ablate(cfg, blocks, train, test, backend.get());
  std::cout << table.to_text();
  if (!json_out.empty()) write_json(table.to_json(), json_out);
  return 0;
}

int run_augment(const Overrides& ov, const std::string& input, const std::string& out_dir, std::string vectors,
                std::string sidecar, std::optional<double> min_sim, std::optional<int> max_copies) {
  auto cfg = ov.resolve();
  if (vectors.empty()) vectors = cfg.augment.word_vectors;
  if (sidecar.empty()) sidecar = cfg.augment.pos_sidecar;
  if (vectors.empty()) throw ConfigError("augment needs a word-vector file (--word-vectors)");
  const double sim = min_sim.value_or(cfg.augment.min_sim);
  const int copies = max_copies.value_or(cfg.augment.max_copies);

  const auto debates = load_debate_dir(input, true);
  const auto store = load_vector_file(vectors);
  std::unique_ptr<Tagger> tagger;
  if (sidecar.empty()) {
    tagger = std::make_unique<FallbackTagger>();
  } else {
    tagger = std::make_unique<SidecarTagger>(SidecarTagger::load(sidecar));
  }
  const auto added = augment_corpus(debates, store, *tagger, sim, copies);

  fs::create_directories(out_dir);
  std::map<std::string, std::vector<const AugmentedRecord*>> by_debate;
  for (const auto& a : added) by_debate[a.record.debate_id].push_back(&a);
  for (const auto& d : debates) {
    Debate expanded = d;
    std::string provenance;
    for (const auto* a : by_debate[d.debate_id]) {
      expanded.records.push_back(a->record);
      provenance += std::to_string(a->record.line_number) + '\t' + std::to_string(a->source_line) + '\n';
    }
    write_debate_tsv(expanded, fs::path(out_dir) / (d.debate_id + ".tsv"));
    io::write_file((fs::path(out_dir) / (d.debate_id + ".provenance")).string(), provenance);
  }
  std::cout << "added " << added.size() << " augmented sentence(s) across " << debates.size() << " debate(s)\n";
  return 0;
}

int run_topics_show(const std::string& model_path, std::optional<int> top_n) {
  const auto model = load_bundle(model_path);
  const auto& tm = model.extractors.topic_model;
  if (!model.blocks.topics || tm.topics == 0) throw ContractError(model_path + " has no topic model");
  const int n = top_n.value_or(model.extractors.topic_top_n);
  std::cout << "topics: " << tm.topics << ", vocabulary: " << tm.vocab_size << ", alpha: " << tm.alpha
            << ", beta: " << tm.beta << '\n';
  for (int k = 0; k < tm.topics; ++k) {
    std::cout << "topic " << k << ':';
    for (const auto& ws : top_words(tm, k, n)) std::cout << ' ' << ws.word << '(' << format_metric(ws.score) << ')';
    std::cout << '\n';
  }
  return 0;
}

int run_embed_cache(const Overrides& ov, const std::vector<std::string>& inputs, const std::string& out) {
  auto cfg = ov.resolve();
  cfg.embedding.backend = "http";
  const auto backend = make_backend(cfg.embedding);
  std::vector<std::string> texts;
  std::set<std::string> keys;
  for (const auto& in : inputs) {
    std::vector<fs::path> files = fs::is_directory(in) ? list_tsv_files(in) : std::vector<fs::path>{in};
    for (const auto& f : files) {
      Debate d;
      try {
        d = parse_debate_tsv(f, true);
      } catch (const ParseError&) {
        d = parse_debate_tsv(f, false);
      }
      for (const auto& r : d.records) {
        if (keys.insert(text_key(r.text)).second) texts.push_back(r.text);
      }
    }
  }
  const auto vecs = embed_batch(texts, *backend);
  VectorStore store(backend->dim());
  for (std::size_t i = 0; i < texts.size(); ++i) store.put(text_key(texts[i]), std::vector<float>(vecs[i].begin(), vecs[i].end()));
  save_vector_file(store, out);
  std::cout << "cached " << store.size() << " sentence vector(s) of dim " << store.dim() << " in " << out << '\n';
  return 0;
}

int run_synth(const std::string& out_dir, synthetic::Options opt, bool unlabeled) {
  fs::create_directories(out_dir);
  for (auto& d : synthetic::generate(opt)) {
    if (unlabeled) {
      for (auto& r : d.records) r.label.reset();
    }
    write_debate_tsv(d, fs::path(out_dir) / (d.debate_id + ".tsv"));
  }
  std::cout << "wrote " << opt.debates << " debate(s) to " << out_dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Check-worthiness ranking: features, boosted trees, IR metrics"};
  app.require_subcommand(1);
  std::function<int()> action;

  // validate
  auto* validate = app.add_subcommand("validate", "check transcripts and report label counts");
  std::vector<std::string> v_inputs;
  bool v_unlabeled = false;
  std::string v_json;
  validate->add_option("inputs", v_inputs, "transcript files or directories")->required();
  validate->add_flag("--unlabeled", v_unlabeled, "inputs are 3-column (no label)");
  validate->add_option("--json", v_json, "also write the report as JSON");
  validate->callback([&] { action = [&] { return run_validate(v_inputs, v_unlabeled, v_json); }; });

  // train
  auto* train = app.add_subcommand("train", "fit extractors and the boosted-tree ranker");
  Overrides t_ov;
  t_ov.attach(train);
  std::string t_dir, t_out;
  train->add_option("--train-dir", t_dir, "directory of labeled transcripts");
  train->add_option("-o,--out", t_out, "model bundle to write")->required();
  train->callback([&] { action = [&] { return run_train(t_ov, t_dir, t_out); }; });

  // rank
  auto* rank = app.add_subcommand("rank", "score transcripts and write run files");
  Overrides r_ov;
  r_ov.attach(rank);
  std::string r_model, r_input, r_out;
  rank->add_option("-m,--model", r_model, "model bundle")->required();
  rank->add_option("-i,--input", r_input, "directory of transcripts");
  rank->add_option("-o,--out", r_out, "directory for run files")->required();
  rank->callback([&] { action = [&] { return run_rank(r_ov, r_model, r_input, r_out); }; });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score run files against gold labels");
  std::string e_gold, e_runs, e_name = "run", e_json;
  evaluate->add_option("-g,--gold", e_gold, "directory of labeled transcripts")->required();
  evaluate->add_option("-r,--runs", e_runs, "directory of run files")->required();
  evaluate->add_option("--name", e_name, "row label");
  evaluate->add_option("--json", e_json, "also write metrics as JSON");
  evaluate->callback([&] { action = [&] { return run_evaluate(e_gold, e_runs, e_name, e_json); }; });

  // ablate
  auto* abl = app.add_subcommand("ablate", "train and evaluate one model per feature subset");
  Overrides a_ov;
  a_ov.attach(abl);
  std::string a_train, a_test, a_json;
  std::vector<std::string> a_subsets;
  abl->add_option("--train-dir", a_train, "labeled training transcripts");
  abl->add_option("--test-dir", a_test, "labeled test transcripts");
  abl->add_option("--subset", a_subsets, "feature subset (repeatable); the first is the baseline");
  abl->add_option("--json", a_json, "also write the table as JSON");
  abl->callback([&] { action = [&] { return run_ablate(a_ov, a_train, a_test, a_subsets, a_json); }; });

  // augment
  auto* aug = app.add_subcommand("augment", "write an expanded training set with word substitutions");
  Overrides g_ov;
  g_ov.attach(aug);
  std::string g_in, g_out, g_vectors, g_pos;
  std::optional<double> g_sim;
  std::optional<int> g_copies;
  aug->add_option("-i,--input", g_in, "labeled transcripts")->required();
  aug->add_option("-o,--out", g_out, "output directory")->required();
  aug->add_option("--word-vectors", g_vectors, "word vector file");
  aug->add_option("--pos", g_pos, "POS sidecar TSV (debate_id, line_number, tags)");
  aug->add_option("--min-sim", g_sim, "minimum cosine similarity for a substitution");
  aug->add_option("--max-copies", g_copies, "augmented copies per sentence");
  aug->callback([&] { action = [&] { return run_augment(g_ov, g_in, g_out, g_vectors, g_pos, g_sim, g_copies); }; });

  // topics show
  auto* topics = app.add_subcommand("topics", "inspect topic models");
  topics->require_subcommand(1);
  auto* show = topics->add_subcommand("show", "print the top words of every topic");
  std::string s_model;
  std::optional<int> s_top;
  show->add_option("-m,--model", s_model, "model bundle")->required();
  show->add_option("--top-n", s_top, "words per topic");
  show->callback([&] { action = [&] { return run_topics_show(s_model, s_top); }; });

  // embed cache
  auto* embed = app.add_subcommand("embed", "embedding utilities");
  embed->require_subcommand(1);
  auto* cache = embed->add_subcommand("cache", "embed transcripts through the HTTP service into a vector file");
  Overrides c_ov;
  c_ov.attach(cache);
  std::vector<std::string> c_inputs;
  std::string c_out;
  cache->add_option("inputs", c_inputs, "transcript files or directories")->required();
  cache->add_option("-o,--out", c_out, "vector file to write")->required();
  cache->callback([&] { action = [&] { return run_embed_cache(c_ov, c_inputs, c_out); }; });

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic labeled debates");
  std::string y_out;
  synthetic::Options y_opt;
  bool y_unlabeled = false;
  synth->add_option("-o,--out", y_out, "output directory")->required();
  synth->add_option("--debates", y_opt.debates, "number of debates");
  synth->add_option("--sentences", y_opt.sentences, "sentences per debate");
  synth->add_option("--positive-rate", y_opt.positive_rate, "share of check-worthy sentences");
  synth->add_option("--seed", y_opt.seed, "generator seed");
  synth->add_option("--prefix", y_opt.id_prefix, "debate id prefix");
  synth->add_flag("--unlabeled", y_unlabeled, "write 3-column files");
  synth->callback([&] { action = [&] { return run_synth(y_out, y_opt, y_unlabeled); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    return action ? action() : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.exit_code();
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
