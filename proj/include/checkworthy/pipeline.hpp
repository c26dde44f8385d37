#pragma once

// End-to-end train / rank / evaluate / ablate over in-memory corpora and
// directories. The CLI is a thin layer over these functions.

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "checkworthy/config.hpp"
#include "checkworthy/corpus.hpp"
#include "checkworthy/eval.hpp"
#include "checkworthy/ranker.hpp"

namespace checkworthy {

/// Stopword-filtered token lists of the check-worthy sentences, empty ones
/// dropped.
inline std::vector<TokenList> topic_training_docs(const std::vector<Debate>& corpus, const Stoplist& stoplist) {
  std::vector<TokenList> docs;
  for (const auto& d : corpus) {
    for (const auto& r : d.records) {
      if (r.label != 1) continue;
      auto t = tokenize(r.text, &stoplist);
      if (!t.empty()) docs.push_back(std::move(t));
    }
  }
  return docs;
}

/// Fits extractor state for the enabled blocks, then the boosted trees.
/// `log` (optional) receives block sizes and the final training MSE.
inline GbrtModel train_model(const std::vector<Debate>& corpus, const PipelineConfig& cfg,
                             const EmbeddingBackend* backend, std::ostream* log = nullptr) {
  if (!cfg.features.any()) throw ConfigError("no feature blocks enabled");
  require_well_formed(corpus);
  for (const auto& d : corpus) {
    if (!d.labeled() && !d.records.empty()) throw ContractError("training debate " + d.debate_id + " is not fully labeled");
  }

  GbrtModel model;
  model.blocks = cfg.features;
  model.config = cfg.gbrt;
  model.config.seed = cfg.seed;
  auto& x = model.extractors;

  if (cfg.features.embedding) {
    if (!backend) throw ConfigError("sbert features need an embedding backend");
    x.embedding_dim = backend->dim();
    x.embedding_kind = backend->kind();
  }
  if (cfg.features.sentiment) x.lexicon = resolve_lexicon(cfg);
  if (cfg.features.topics) {
    const auto stoplist = resolve_stoplist(cfg);
    auto docs = topic_training_docs(corpus, stoplist);
    if (docs.empty()) throw ContractError("topic features need at least one non-empty check-worthy sentence");
    x.topic_model = fit_lda(docs, cfg.lda_params());
    x.topic_top_n = cfg.topics.top_n;
    x.topic_vocab = build_topic_vocab(x.topic_model, cfg.topics.top_n);
  }
  if (cfg.features.bigrams) x.bigrams = select_discriminative_bigrams(corpus, cfg.bigram_threshold);

  model.manifest = build_manifest(model.blocks, x);
  const auto assembler = model.assembler();
  TrainingSet data(model.manifest.size());
  for (const auto& d : corpus) {
    auto rows = assembler.assemble_debate(d, backend);
    for (std::size_t i = 0; i < rows.size(); ++i) data.add(rows[i].values, static_cast<double>(*d.records[i].label));
  }
  model.ensemble = fit_gbrt(data, model.config);

  if (log) {
    *log << "feature blocks:";
    for (const auto& b : model.manifest.blocks) *log << ' ' << b.name << '=' << b.size;
    *log << " (total " << model.manifest.size() << ")\n";
    *log << "training rows: " << data.rows() << ", trees: " << model.ensemble.trees.size() << '\n';
    *log << "final training MSE: " << model.ensemble.final_mse() << '\n';
  }
  return model;
}

/// Refuses to rank with a backend that cannot reproduce the model's sbert block.
inline void check_backend_compatible(const GbrtModel& model, const EmbeddingBackend* backend) {
  if (!model.blocks.embedding) return;
  if (!backend) throw ContractError("model uses sbert features but no embedding backend is configured");
  if (backend->dim() != model.extractors.embedding_dim) {
    throw ContractError("model was trained with " + std::to_string(model.extractors.embedding_dim) +
                        "-dim embeddings, backend provides " + std::to_string(backend->dim()));
  }
  if (backend->kind() != model.extractors.embedding_kind) {
    throw ContractError("model was trained with the '" + model.extractors.embedding_kind + "' embedding backend, got '" +
                        backend->kind() + "'");
  }
}

inline std::map<std::string, std::vector<RunEntry>> rank_corpus(const GbrtModel& model, const std::vector<Debate>& debates,
                                                                const std::vector<std::string>& rule_names,
                                                                const EmbeddingBackend* backend) {
  check_backend_compatible(model, backend);
  require_well_formed(debates);
  const auto rules = make_rules(rule_names, model.extractors);
  std::map<std::string, std::vector<RunEntry>> runs;
  for (const auto& d : debates) runs[d.debate_id] = rank_debate(model, d, rules, backend);
  return runs;
}

inline MetricsReport evaluate_runs(const std::map<std::string, std::vector<RunEntry>>& runs,
                                   const std::vector<Debate>& gold) {
  std::map<std::string, Ranking> rankings;
  std::map<std::string, QueryJudgments> judgments;
  std::map<std::string, const Debate*> by_id;
  for (const auto& d : gold) {
    judgments[d.debate_id] = judgments_from_debate(d);
    by_id[d.debate_id] = &d;
  }
  for (const auto& [id, entries] : runs) {
    rankings[id] = ranking_from_run(entries);
    if (auto it = by_id.find(id); it != by_id.end()) require_covers(rankings[id], *it->second);
  }
  return evaluate_run(rankings, judgments);
}

/// Reads `<debate_id>.tsv` run files from `run_dir` and scores them against
/// the labeled transcripts in `gold_dir`.
inline MetricsReport evaluate_dirs(const std::filesystem::path& gold_dir, const std::filesystem::path& run_dir) {
  const auto gold = load_debate_dir(gold_dir, true);
  std::map<std::string, std::vector<RunEntry>> runs;
  for (const auto& f : list_tsv_files(run_dir)) runs[f.stem().string()] = read_run(f);
  return evaluate_runs(runs, gold);
}

/// Trains and evaluates one model per block subset. The first subset is the
/// baseline row of the resulting table.
inline AblationTable ablate(const PipelineConfig& base, const std::vector<FeatureBlocks>& subsets,
                            const std::vector<Debate>& train, const std::vector<Debate>& test,
                            const EmbeddingBackend* backend) {
  if (subsets.empty()) throw ConfigError("ablation needs at least one feature subset");
  std::vector<AblationRow> rows;
  for (const auto& blocks : subsets) {
    auto cfg = base;
    cfg.features = blocks;
    const auto model = train_model(train, cfg, blocks.embedding ? backend : nullptr);
    const auto runs = rank_corpus(model, test, cfg.rules, blocks.embedding ? backend : nullptr);
    rows.push_back({blocks.to_string(), evaluate_runs(runs, test)});
  }
  return ablation_report(std::move(rows), 0);
}

}  // namespace checkworthy
