/*
 * Copyright 2026 The Kappa Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// kappa: corpus generation, training, portrait generation, evaluation and
// Phase-2 analysis from one binary.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

#include "kappa/analysis.hpp"
#include "kappa/bundle.hpp"
#include "kappa/error.hpp"
#include "kappa/inference.hpp"
#include "kappa/metrics.hpp"
#include "kappa/run_config.hpp"
#include "kappa/synth.hpp"
#include "kappa/training.hpp"

namespace fs = std::filesystem;
using namespace kappa;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> levels;
  std::optional<std::string> mode;
  std::vector<std::string> overrides;  // --set key=value
};

// defaults < config file < KAPPA_* environment < flags
RunConfig resolve(const Common& c) {
  RunConfig rc;
  if (!c.config_path.empty()) rc.apply(parse_config_file(c.config_path));
  rc.apply_env([](const char* name) { return std::getenv(name); });
  for (const auto& kv : c.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got `" + kv + "`");
    rc.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) rc.set("seed", std::to_string(*c.seed));
  if (c.threads) rc.set("threads", std::to_string(*c.threads));
  if (c.levels) rc.set("levels", *c.levels);
  if (c.mode) rc.set("mode", *c.mode);
  return rc;
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "key = value config file");
  app->add_option("--seed", c.seed, "random seed");
  app->add_option("--threads", c.threads, "worker threads for per-document work");
  app->add_option("--set", c.overrides, "override a config key (key=value)");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

std::vector<MultiLevelDocument> load_corpus(const std::string& path, const RunConfig& rc) {
  if (!fs::exists(path)) throw Error("missing corpus file: " + path);
  return load_jsonl(path, rc.max_segment_tokens);
}

ModelBundle load_model(const std::string& path) {
  if (!fs::exists(path)) throw Error("missing checkpoint: " + path);
  return load_bundle(path);
}

int cmd_gen_corpus(const RunConfig& rc, std::size_t n, const std::string& out) {
  SynthProfile profile;
  profile.max_segment_tokens = rc.max_segment_tokens;
  std::vector<MultiLevelDocument> docs;
  for (const auto& r : synth_records(rc.seed, n, profile)) docs.push_back(make_document(r, rc.max_segment_tokens));
  save_jsonl(out, docs);
  std::cout << "wrote " << docs.size() << " documents to " << out << '\n';
  return 0;
}

int cmd_train(const RunConfig& rc, const std::string& corpus, const std::string& out, std::string loss_csv) {
  auto docs = load_corpus(corpus, rc);
  auto vocab = build_vocabulary(docs);
  ModelConfig mc = rc.model;
  mc.vocab_size = vocab.size();
  Model model(mc, rc.seed);
  if (loss_csv.empty()) loss_csv = out + ".loss.csv";
  std::vector<LossReport> reports;
  TrainHooks hooks;
  hooks.on_epoch = [&](const LossReport& r) {
    reports.push_back(r);
    // Checkpoint and loss report are refreshed every epoch.
    save_bundle(out, model, vocab);
    write_text(loss_csv, loss_report_csv(reports));
    std::cerr << "epoch " << r.epoch << " stage " << r.stage << " L1_W " << r.l1_w << '\n';
  };
  tsmt_train(model, vocab, docs, rc.tsmt, hooks);
  save_bundle(out, model, vocab);
  write_text(loss_csv, loss_report_csv(reports));
  std::cout << "wrote " << out << " and " << loss_csv << '\n';
  return 0;
}

int cmd_portraits(const RunConfig& rc, const std::string& ckpt, const std::string& corpus, const std::string& out,
                  bool phd) {
  auto bundle = load_model(ckpt);
  auto docs = load_corpus(corpus, rc);
  std::vector<Portrait> portraits(docs.size());
  parallel_for(docs.size(), rc.threads, [&](std::size_t i) {
    portraits[i] = phd ? phd_portrait(*bundle.model, bundle.vocab, docs[i])
                       : generate_per_segment(*bundle.model, bundle.vocab, docs[i]);
  });
  save_portraits(out, portraits);
  std::cout << "wrote " << portraits.size() << " portraits to " << out << '\n';
  return 0;
}

int cmd_eval(const RunConfig& rc, const std::string& predictions, const std::string& corpus, const std::string& out) {
  if (!fs::exists(predictions)) throw Error("missing predictions file: " + predictions);
  auto portraits = load_portraits(predictions);
  auto docs = load_corpus(corpus, rc);
  std::map<std::string, const MultiLevelDocument*> by_id;
  for (const auto& d : docs) by_id[d.doc_id] = &d;
  std::vector<EvalRecord> records;
  for (const auto& p : portraits) {
    auto it = by_id.find(p.doc_id);
    if (it == by_id.end()) throw Error("prediction for unknown document `" + p.doc_id + "`");
    const auto& doc = *it->second;
    auto entries = p.entries;
    std::stable_sort(entries.begin(), entries.end(),
                     [](const PortraitEntry& a, const PortraitEntry& b) { return a.confidence > b.confidence; });
    std::vector<TokenSeq> ranked;
    for (const auto& e : entries) ranked.push_back(e.tokens);
    std::vector<std::vector<SlotOutput>> raw;
    for (const auto& l : p.levels) raw.push_back(l.raw);
    auto source = doc.all_tokens();
    records.push_back(evaluate_document(doc.doc_id, ranked, doc.keyphrases.present, doc.keyphrases.absent, source,
                                        raw, source.size()));
  }
  write_eval_csv(out, records);
  auto s = summarize(records);
  std::printf("present F1@5 %.4f F1@M %.4f | absent F1@5 %.4f F1@M %.4f | dup %.4f null %.4f\n", s.present.f1_5,
              s.present.f1_m, s.absent.f1_5, s.absent.f1_m, s.duplication, s.null_ratio);
  return 0;
}

int cmd_analyze(const RunConfig& rc, const std::string& portraits_path, const std::string& corpus,
                const std::string& out, double train_fraction) {
  if (!fs::exists(portraits_path)) throw Error("missing portraits file: " + portraits_path);
  auto mode = parse_mode(rc.mode);
  auto levels = parse_levels(rc.levels);
  auto docs = load_corpus(corpus, rc);
  std::map<std::string, Portrait> by_id;
  for (auto& p : load_portraits(portraits_path)) by_id[p.doc_id] = std::move(p);
  std::vector<AnalysisInput> inputs;
  std::vector<std::string> labels;
  for (const auto& d : docs) {
    if (!d.label) throw Error("document `" + d.doc_id + "` has no label");
    auto it = by_id.find(d.doc_id);
    if (it == by_id.end()) throw Error("no portrait for document `" + d.doc_id + "`");
    inputs.push_back(build_input(d, it->second, mode, levels));
    labels.push_back(*d.label);
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw Error("--train-fraction must lie in (0, 1)");
  auto n_train = static_cast<std::size_t>(train_fraction * static_cast<double>(docs.size()));
  if (n_train == 0 || n_train >= docs.size()) throw Error("corpus too small to split for analysis");
  std::vector<TokenSeq> xtr;
  for (std::size_t i = 0; i < n_train; ++i) xtr.push_back(inputs[i].tokens);
  NaiveBayes nb;
  nb.train(xtr, std::vector<std::string>(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n_train)));
  std::vector<std::string> pred, gold;
  double tokens = 0.0;
  for (std::size_t i = n_train; i < docs.size(); ++i) {
    pred.push_back(nb.classify(inputs[i].tokens));
    gold.push_back(labels[i]);
    tokens += static_cast<double>(inputs[i].token_count);
  }
  ModeResult r{mode, levels, accuracy(pred, gold), tokens / static_cast<double>(gold.size()), gold.size()};
  write_text(out, report_csv({r}));
  std::cout << report_table({r});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kappa keyphrase generation and portrait toolkit"};
  app.require_subcommand(1);

  Common common;
  std::size_t n_docs = 64;
  std::string out, corpus, ckpt, predictions, portraits, loss_csv;
  double train_fraction = 0.5;

  auto* gen = app.add_subcommand("gen-corpus", "write a synthetic corpus as JSONL");
  add_common(gen, common);
  gen->add_option("--n", n_docs, "number of documents");
  gen->add_option("--out", out, "output JSONL")->required();

  auto* train = app.add_subcommand("train", "train a model with TSMT");
  add_common(train, common);
  train->add_option("--corpus", corpus, "training corpus JSONL")->required();
  train->add_option("--out", out, "checkpoint path")->required();
  train->add_option("--loss-csv", loss_csv, "loss report (default: <out>.loss.csv)");

  auto* generate = app.add_subcommand("generate", "per-segment generation without hierarchical decoding");
  auto* portrait = app.add_subcommand("portrait", "hierarchical portrait generation");
  for (auto* sub : {generate, portrait}) {
    add_common(sub, common);
    sub->add_option("--checkpoint", ckpt, "model checkpoint")->required();
    sub->add_option("--corpus", corpus, "corpus JSONL")->required();
    sub->add_option("--out", out, "output portraits JSONL")->required();
  }

  auto* eval = app.add_subcommand("eval", "score predictions against corpus keyphrases");
  add_common(eval, common);
  eval->add_option("--predictions", predictions, "portraits JSONL")->required();
  eval->add_option("--corpus", corpus, "corpus JSONL")->required();
  eval->add_option("--out", out, "per-document CSV report")->required();

  auto* analyze = app.add_subcommand("analyze", "portrait-based classification report");
  add_common(analyze, common);
  analyze->add_option("--portraits", portraits, "portraits JSONL")->required();
  analyze->add_option("--corpus", corpus, "labelled corpus JSONL")->required();
  analyze->add_option("--out", out, "CSV report")->required();
  analyze->add_option("--mode", common.mode, "pure, augmented or original");
  analyze->add_option("--levels", common.levels, "1, 1,2 or 1,2,3");
  analyze->add_option("--train-fraction", train_fraction, "leading share of documents used to train the classifier");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    RunConfig rc = resolve(common);
    if (gen->parsed()) return cmd_gen_corpus(rc, n_docs, out);
    if (train->parsed()) return cmd_train(rc, corpus, out, loss_csv);
    if (generate->parsed()) return cmd_portraits(rc, ckpt, corpus, out, false);
    if (portrait->parsed()) return cmd_portraits(rc, ckpt, corpus, out, true);
    if (eval->parsed()) return cmd_eval(rc, predictions, corpus, out);
    if (analyze->parsed()) return cmd_analyze(rc, portraits, corpus, out, train_fraction);
  } catch (const std::exception& e) {
    std::cerr << "kappa: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
