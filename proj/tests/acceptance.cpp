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

// Acceptance checks. With no arguments every criterion runs; otherwise only
// the numbered ones. Prints one PASS/FAIL line per criterion and exits
// non-zero when any fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <string>

#include "cli_runner.hpp"
#include "kappa/analysis.hpp"
#include "kappa/assignment.hpp"
#include "kappa/inference.hpp"
#include "kappa/metrics.hpp"
#include "kappa/porter.hpp"
#include "kappa/synth.hpp"
#include "kappa/training.hpp"

using namespace kappa;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1: assignment oracle ----------------------------------------------------------------

Outcome assignment_oracle() {
  auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t mismatches = 0, total = 0;
  for (std::size_t n = 2; n <= 6; ++n)
    for (int i = 0; i < 200; ++i) {
      // Costs are negated sums of k = 2 step probabilities.
      CostMatrix c(n, std::vector<double>(n));
      for (auto& row : c)
        for (auto& v : row) v = -(u(rng) + u(rng)) / 2.0;
      if (hungarian(c).total != brute_force(c).total) ++mismatches;
      ++total;
    }
  double s = seconds_since(t0);
  return {mismatches == 0 && s < 10.0, std::to_string(total - mismatches) + "/" + std::to_string(total) +
                                           " exact matches in " + fmt("%.2f", s) + " s (limit 10 s)"};
}

// ---- 2: gradient fidelity -------------------------------------------------------------------

Outcome gradient_fidelity() {
  auto t0 = Clock::now();
  std::vector<TokenSeq> words(1);
  for (int i = 0; i < 43; ++i) words[0].push_back("w" + std::to_string(i));
  auto vocab = Vocabulary::build(words);
  ModelConfig c;
  c.d = 16;
  c.n_heads = 2;
  c.n_enc_layers = c.n_dec_layers = 2;
  c.N = 4;
  c.N_K = 1;
  c.vocab_size = vocab.size();
  c.ffn_width = 32;
  Model m(c, 17);
  std::vector<Parameter*> all;
  for (std::size_t i = 0; i < m.params().size(); ++i) all.push_back(&m.params()[i]);
  std::vector<int> src = {8, 12, 9, 30, 41, 8, 22};
  BioSequence bio = {Bio::O, Bio::B, Bio::I, Bio::O, Bio::B, Bio::O, Bio::O};
  std::vector<TargetEntry> targets = {{{"w3", "w4"}, TargetOrigin::kGroundTruth},
                                      {{"w9"}, TargetOrigin::kKeyword},
                                      {{}, TargetOrigin::kNull},
                                      {{"w20", "w5", "w7"}, TargetOrigin::kGroundTruth}};
  SlotKeywords kw = {{12}, {}, {12}, {}};
  GradCheckOptions opt{1e-5, 64, 5};
  auto lw = grad_check([&](Tape& t) { return loss_kwe(m.kwe_forward(t, m.encode(t, src)), bio); }, all, opt);
  auto lg = grad_check(
      [&](Tape& t) { return loss_kg(t, m, vocab, m.encode(t, src), kw, targets, KgWeights{}); }, all, opt);
  double s = seconds_since(t0);
  bool pass = lw.max_relative_error < 1e-4 && lg.max_relative_error < 1e-4 && lw.coordinates >= 50 &&
              lg.coordinates >= 50 && s < 120.0;
  return {pass, "L1_W max rel err " + fmt("%.2e", lw.max_relative_error) + " over " + std::to_string(lw.coordinates) +
                    " coords, L_G " + fmt("%.2e", lg.max_relative_error) + " over " + std::to_string(lg.coordinates) +
                    " coords (limit 1e-4), " + fmt("%.1f", s) + " s"};
}

// ---- shared training/inference helpers for 3, 4 and 10 --------------------------------------

struct HeldOut {
  EvalSummary summary;
  std::vector<Portrait> portraits;
};

HeldOut portraits_and_scores(const Model& model, const Vocabulary& vocab, const std::vector<MultiLevelDocument>& docs) {
  HeldOut out;
  std::vector<EvalRecord> recs;
  for (const auto& doc : docs) {
    auto p = phd_portrait(model, vocab, doc);
    std::vector<TokenSeq> ranked;
    auto entries = p.entries;
    std::stable_sort(entries.begin(), entries.end(),
                     [](const PortraitEntry& a, const PortraitEntry& b) { return a.confidence > b.confidence; });
    for (const auto& e : entries) ranked.push_back(e.tokens);
    std::vector<std::vector<SlotOutput>> raw;
    for (const auto& l : p.levels) raw.push_back(l.raw);
    auto source = doc.all_tokens();
    recs.push_back(evaluate_document(doc.doc_id, ranked, doc.keyphrases.present, doc.keyphrases.absent, source, raw,
                                     source.size()));
    out.portraits.push_back(std::move(p));
  }
  out.summary = summarize(recs);
  return out;
}

// Reduced-width model and schedule used where several seeds must fit a budget.
struct Budget {
  std::size_t d = 32;
  std::size_t epochs = 40;
  double learning_rate = 1e-3;
};

std::unique_ptr<Model> train_budget_model(const std::vector<MultiLevelDocument>& train, const Vocabulary& vocab,
                                          std::uint64_t seed, const Budget& b, bool use_kwp, bool use_kcc) {
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.d = b.d;
  mc.ffn_width = 2 * b.d;
  mc.use_kcc = use_kcc;
  auto model = std::make_unique<Model>(mc, seed);
  TsmtConfig tc;
  tc.E = b.epochs;
  tc.use_kwp = use_kwp;
  tc.seed = seed;
  tc.alpha_w = tc.alpha_g = b.learning_rate;
  tsmt_train(*model, vocab, train, tc);
  return model;
}

// ---- 3: overfit learning check ---------------------------------------------------------------

Outcome overfit_learning() {
  auto t0 = Clock::now();
  auto docs = synth_corpus(1, 64, SynthProfile{});
  auto vocab = build_vocabulary(docs);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  Model model(mc, 1);
  TsmtConfig tc;
  tc.E = 150;
  tsmt_train(model, vocab, docs, tc);
  auto s = portraits_and_scores(model, vocab, docs).summary;
  double secs = seconds_since(t0);
  bool pass = vocab.size() <= 300 && s.present.f1_m >= 0.80 && s.absent.f1_m >= 0.50 && secs < 1800.0;
  return {pass, "vocab " + std::to_string(vocab.size()) + ", E=150: present F1@M " + fmt("%.3f", s.present.f1_m) +
                    " (>= 0.80), absent F1@M " + fmt("%.3f", s.absent.f1_m) + " (>= 0.50), " + fmt("%.0f", secs) +
                    " s (limit 1800 s)"};
}

// ---- 4: null and duplication ablation -----------------------------------------------------------

Outcome ablation_direction() {
  auto t0 = Clock::now();
  int null_ok = 0, dup_ok = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto docs = synth_corpus(seed, 96, SynthProfile{});
    auto vocab = build_vocabulary(docs);
    std::vector<MultiLevelDocument> train(docs.begin(), docs.begin() + 48), held(docs.begin() + 48, docs.end());
    Budget b;
    auto full = portraits_and_scores(*train_budget_model(train, vocab, seed, b, true, true), vocab, held).summary;
    auto no_kwp = portraits_and_scores(*train_budget_model(train, vocab, seed, b, false, true), vocab, held).summary;
    auto no_kcc = portraits_and_scores(*train_budget_model(train, vocab, seed, b, true, false), vocab, held).summary;
    null_ok += full.null_ratio <= no_kwp.null_ratio;
    dup_ok += full.duplication <= no_kcc.duplication;
    detail += " s" + std::to_string(seed) + " null " + fmt("%.3f", full.null_ratio) + "/" +
              fmt("%.3f", no_kwp.null_ratio) + " dup " + fmt("%.3f", full.duplication) + "/" +
              fmt("%.3f", no_kcc.duplication) + ";";
  }
  return {null_ok >= 4 && dup_ok >= 4, "KWP null <= ablated on " + std::to_string(null_ok) + "/5, KCC dup <= ablated on " +
                                           std::to_string(dup_ok) + "/5 (need 4);" + detail + " " +
                                           fmt("%.0f", seconds_since(t0)) + " s"};
}

// ---- 5: metric oracles ---------------------------------------------------------------------------

Outcome metric_oracles() {
  auto ph = [](std::initializer_list<const char*> xs) {
    std::vector<TokenSeq> v;
    for (auto x : xs) v.push_back(tokenize(x));
    return v;
  };
  double f1 = f1_at_5(ph({"graph model", "node"}), ph({"graph model", "edge"})).f1;
  double ndcg = ndcg_at_k(ph({"b", "a"}), ph({"a"}), 5);
  bool f1_ok = std::abs(f1 - 2.0 / 7.0) <= 1e-9;
  bool ndcg_ok = std::abs(ndcg - 1.0 / std::log2(3.0)) <= 1e-9;
  bool porter_ok =
      porter_stem("caresses") == "caress" && porter_stem("ponies") == "poni" && porter_stem("relational") == "relat";
  return {f1_ok && ndcg_ok && porter_ok, "F1@5 " + fmt("%.12f", f1) + " (2/7), NDCG " + fmt("%.12f", ndcg) +
                                             " (1/log2 3), Porter vectors " + (porter_ok ? "exact" : "WRONG")};
}

// ---- 6: PHD template ---------------------------------------------------------------------------------

Outcome phd_template() {
  const TokenSeq body = {"a", "b"};
  bool text_ok = render_prompt({{"graph"}}, body) == "keyphrases from higher-level: graph [sep] find keyphrases from: a b";
  auto docs = synth_corpus(3, 2, SynthProfile{});
  auto vocab = build_vocabulary(docs);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.d = 16;
  mc.n_heads = 2;
  Model model(mc, 3);
  bool k0_ok = true;
  for (const auto& doc : docs) {
    auto p = phd_portrait(model, vocab, doc);
    auto by_start = p.levels[0].keywords;
    std::stable_sort(by_start.begin(), by_start.end(),
                     [](const KeywordSpan& a, const KeywordSpan& b) { return a.start < b.start; });
    std::vector<TokenSeq> k0;
    for (const auto& k : by_start) k0.push_back(k.tokens);
    k0_ok = k0_ok && p.levels[0].input.previous == k0 &&
            p.levels[0].input.rendered == render_prompt(k0, doc.segments[0].tokens);
  }
  return {text_ok && k0_ok, std::string("template ") + (text_ok ? "bit-exact" : "DIFFERS") +
                                ", level-1 prompt record " + (k0_ok ? "equals W^K_1" : "does not equal W^K_1")};
}

// ---- 7: freezing contracts ---------------------------------------------------------------------------

Outcome freezing() {
  auto docs = synth_corpus(4, 6, SynthProfile{});
  auto vocab = build_vocabulary(docs);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.d = 16;
  mc.n_heads = 2;
  Model model(mc, 4);
  TsmtConfig tc;
  tc.E = 3;
  tc.E1 = 1;
  std::vector<Tensor> enc, dec;
  std::map<std::string, std::pair<int, int>> tally;  // phase -> (held, checked)
  TrainHooks hooks;
  auto same = [](const std::vector<Tensor>& a, const std::vector<Tensor>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (!(a[i] == b[i])) return false;
    return true;
  };
  hooks.on_phase = [&](const std::string& phase, bool before) {
    auto& p = model.params();
    if (before) {
      enc = p.snapshot(ParamGroup::kEncoder);
      dec = p.snapshot(ParamGroup::kDecoder);
      return;
    }
    bool held = phase == "stage2" ? same(enc, p.snapshot(ParamGroup::kEncoder)) : same(dec, p.snapshot(ParamGroup::kDecoder));
    tally[phase].first += held;
    tally[phase].second += 1;
  };
  tsmt_train(model, vocab, docs, tc, hooks);
  bool pass = tally.size() == 3;
  std::string detail;
  for (const auto& [phase, t] : tally) {
    pass = pass && t.first == t.second && t.second > 0;
    detail += phase + " " + std::to_string(t.first) + "/" + std::to_string(t.second) + " ";
  }
  return {pass, detail + "updates left the frozen group bit-identical"};
}

// ---- 8: slot isolation ---------------------------------------------------------------------------------

Outcome slot_isolation() {
  std::vector<TokenSeq> words(1);
  for (int i = 0; i < 20; ++i) words[0].push_back("w" + std::to_string(i));
  auto vocab = Vocabulary::build(words);
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.d = 16;
  mc.n_heads = 2;
  Model model(mc, 8);
  const std::size_t N = mc.N, L = 3;
  std::vector<std::vector<int>> inputs(N);
  for (std::size_t n = 0; n < N; ++n) inputs[n] = {kPad, static_cast<int>(8 + n), static_cast<int>(9 + n)};
  SlotKeywords kw(N);
  kw[0] = {10};
  kw[4] = {10};
  auto run = [&](const SlotKeywords& k) {
    Tape tape;
    return model.decode(tape, model.encode(tape, {8, 9, 10, 11, 12}), inputs, k).value();
  };
  auto base = run(kw);
  std::size_t violations = 0, changed = 0;
  for (std::size_t target = 0; target < N; ++target) {
    auto k = kw;
    k[target] = {15, 16};
    auto p = run(k);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t r = n * L; r < (n + 1) * L; ++r) {
        bool same = true;
        for (std::size_t v = 0; v < mc.vocab_size; ++v) same = same && base.at(r, v) == p.at(r, v);
        if (n != target && !same) ++violations;
        if (n == target && !same) ++changed;
      }
  }
  return {violations == 0 && changed == N * L, std::to_string(violations) + " rows of other slots changed, " +
                                                   std::to_string(changed) + "/" + std::to_string(N * L) +
                                                   " rows of the perturbed slot changed"};
}

// ---- 9: end-to-end determinism ----------------------------------------------------------------------------

Outcome cli_determinism() {
  using kappa::testing::read_file;
  using kappa::testing::run_cli;
  const std::string small =
      " --seed 11 --set d=16 --set n_heads=2 --set n_enc_layers=1 --set n_dec_layers=1 --set ffn_width=32"
      " --set epochs=4 --set stage1_epochs=2";
  const std::vector<std::string> outputs = {"corpus.jsonl", "model.ckpt", "model.ckpt.loss.csv", "portraits.jsonl",
                                            "generated.jsonl", "eval.csv", "analysis.csv"};
  std::vector<std::vector<std::string>> runs;
  for (int r = 0; r < 2; ++r) {
    auto dir = kappa::testing::scratch_dir("acceptance_run" + std::to_string(r));
    auto q = [&](const char* f) { return " \"" + (dir / f).string() + "\""; };
    const std::vector<std::string> steps = {
        "gen-corpus --seed 11 --n 12 --out" + q("corpus.jsonl"),
        "train" + small + " --corpus" + q("corpus.jsonl") + " --out" + q("model.ckpt"),
        "portrait --seed 11 --checkpoint" + q("model.ckpt") + " --corpus" + q("corpus.jsonl") + " --out" +
            q("portraits.jsonl"),
        "generate --seed 11 --checkpoint" + q("model.ckpt") + " --corpus" + q("corpus.jsonl") + " --out" +
            q("generated.jsonl"),
        "eval --predictions" + q("portraits.jsonl") + " --corpus" + q("corpus.jsonl") + " --out" + q("eval.csv"),
        "analyze --mode augmented --levels 1,2,3 --portraits" + q("portraits.jsonl") + " --corpus" +
            q("corpus.jsonl") + " --out" + q("analysis.csv")};
    for (const auto& s : steps) {
      auto res = run_cli(s, dir);
      if (res.status != 0) return {false, "step failed: kappa " + s.substr(0, s.find(' ')) + ": " + res.err};
    }
    std::vector<std::string> bytes;
    for (const auto& f : outputs) bytes.push_back(read_file(dir / f));
    runs.push_back(std::move(bytes));
  }
  std::size_t same = 0;
  std::string differing;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    if (runs[0][i] == runs[1][i] && !runs[0][i].empty())
      ++same;
    else
      differing += " " + outputs[i];
  }
  return {same == outputs.size(), std::to_string(same) + "/" + std::to_string(outputs.size()) +
                                      " pipeline outputs byte-identical across two runs" +
                                      (differing.empty() ? "" : " (differ:" + differing + ")")};
}

// ---- 10: phase-2 sanity -------------------------------------------------------------------------------------

Outcome phase2_sanity() {
  auto t0 = Clock::now();
  const std::vector<int> levels = {1, 2, 3};
  int pure_ok = 0, aug_ok = 0, both = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    // 48 documents train the generator; of the remaining 80, the first 16
    // train the classifier and 64 are scored.
    auto docs = synth_corpus(seed, 128, SynthProfile{});
    auto vocab = build_vocabulary(docs);
    std::vector<MultiLevelDocument> kg(docs.begin(), docs.begin() + 48), held(docs.begin() + 48, docs.end());
    auto model = train_budget_model(kg, vocab, seed, Budget{}, true, true);
    auto portraits = portraits_and_scores(*model, vocab, held).portraits;
    const std::size_t n_train = 16;
    std::vector<std::string> ytr, yte;
    for (std::size_t i = 0; i < held.size(); ++i) (i < n_train ? ytr : yte).push_back(*held[i].label);
    std::map<AnalysisMode, double> acc;
    for (auto mode : {AnalysisMode::kPure, AnalysisMode::kAugmented, AnalysisMode::kOriginal}) {
      std::vector<TokenSeq> xtr, xte;
      for (std::size_t i = 0; i < held.size(); ++i)
        (i < n_train ? xtr : xte).push_back(build_input(held[i], portraits[i], mode, levels).tokens);
      NaiveBayes nb;
      nb.train(xtr, ytr);
      std::vector<std::string> pred;
      for (const auto& x : xte) pred.push_back(nb.classify(x));
      acc[mode] = accuracy(pred, yte);
    }
    double majority = majority_baseline(ytr, yte);
    bool p = acc[AnalysisMode::kPure] > majority, a = acc[AnalysisMode::kAugmented] >= acc[AnalysisMode::kOriginal];
    pure_ok += p;
    aug_ok += a;
    both += p && a;
    detail += " s" + std::to_string(seed) + " pure " + fmt("%.3f", acc[AnalysisMode::kPure]) + " maj " +
              fmt("%.3f", majority) + " aug " + fmt("%.3f", acc[AnalysisMode::kAugmented]) + " orig " +
              fmt("%.3f", acc[AnalysisMode::kOriginal]) + ";";
  }
  double secs = seconds_since(t0);
  return {both >= 4 && secs < 300.0, "pure > majority and augmented >= original on " + std::to_string(both) +
                                         "/5 seeds (need 4; pure " + std::to_string(pure_ok) + "/5, augmented " +
                                         std::to_string(aug_ok) + "/5);" + detail + " " + fmt("%.0f", secs) +
                                         " s (limit 300 s)"};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> c = {
      {"assignment oracle equivalence", assignment_oracle},
      {"gradient fidelity", gradient_fidelity},
      {"overfit learning check", overfit_learning},
      {"null and duplication mitigation direction", ablation_direction},
      {"metric oracles", metric_oracles},
      {"hierarchical prompt template", phd_template},
      {"freezing contracts", freezing},
      {"slot isolation", slot_isolation},
      {"end-to-end determinism", cli_determinism},
      {"portrait classification sanity", phase2_sanity}};
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::size_t> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::stoul(argv[i]));
  int failures = 0;
  for (std::size_t i = 0; i < criteria().size(); ++i) {
    if (!wanted.empty() && !wanted.count(i + 1)) continue;
    Outcome o;
    try {
      o = criteria()[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria()[i].first
              << "): " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
