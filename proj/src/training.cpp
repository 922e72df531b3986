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

#include "kappa/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "kappa/error.hpp"
#include "kappa/optimizer.hpp"

namespace kappa {

void TsmtConfig::validate() const {
  if (E == 0) throw Error("E must be at least 1");
  // E1 == E is allowed: it runs stage 1 only.
  if (E1 > E) throw Error("E1 must not exceed E");
  if (E2 == 0) throw Error("E2 must be at least 1");
  if (batch == 0) throw Error("batch size must be at least 1");
  for (double w : {lambda_null, lambda_w, lambda_g, alpha_w, alpha_g})
    if (!(w >= 0.0) || !std::isfinite(w)) throw Error("loss weights and learning rates must be finite and >= 0");
}

std::string loss_report_csv(const std::vector<LossReport>& reports) {
  std::ostringstream os;
  os << "epoch,stage,l1_w,l_g,l2_w,null_ratio,duplication\n";
  auto cell = [](double v) {
    if (std::isnan(v)) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8f", v);
    return std::string(buf);
  };
  for (const auto& r : reports)
    os << r.epoch << ',' << r.stage << ',' << cell(r.l1_w) << ',' << cell(r.l_g) << ',' << cell(r.l2_w) << ','
       << cell(r.null_ratio) << ',' << cell(r.duplication) << '\n';
  return os.str();
}

// ---- KWP ------------------------------------------------------------------------------

std::vector<KeywordSpan> padding_keywords(const std::vector<KeywordSpan>& keywords,
                                          const std::vector<TokenSeq>& excluded) {
  std::set<TokenSeq> skip(excluded.begin(), excluded.end());
  std::vector<KeywordSpan> ranked = keywords;
  std::stable_sort(ranked.begin(), ranked.end(), [](const KeywordSpan& a, const KeywordSpan& b) {
    return a.confidence != b.confidence ? a.confidence > b.confidence : a.start < b.start;
  });
  std::vector<KeywordSpan> out;
  for (auto& k : ranked) {
    if (k.tokens.empty() || !skip.insert(k.tokens).second) continue;
    out.push_back(std::move(k));
  }
  return out;
}

std::vector<KeywordSpan> padding_keywords(const KeyphraseSet& keyphrases, const std::vector<KeywordSpan>& keywords) {
  return padding_keywords(keywords, keyphrases.present);
}

namespace {

std::vector<TargetEntry> ground_truth_pool(const std::vector<TokenSeq>& phrases, std::size_t half, const char* group) {
  std::vector<TargetEntry> pool;
  std::set<TokenSeq> seen;
  for (const auto& p : phrases) {
    if (p.empty() || !seen.insert(p).second) continue;
    pool.push_back({p, TargetOrigin::kGroundTruth});
  }
  if (pool.size() > half) {
    std::cerr << "warning: " << pool.size() << " " << group << " keyphrases exceed " << half
              << " slots; keeping the first " << half << "\n";
    pool.resize(half);
  }
  return pool;
}

}  // namespace

TargetList kwp_build_targets(const KeyphraseSet& keyphrases, const std::vector<KeywordSpan>& keywords, std::size_t N,
                             const std::vector<TokenSeq>& excluded, bool use_kwp) {
  if (N == 0 || N % 2 != 0) throw Error("kwp_build_targets: N must be positive and even");
  const std::size_t half = N / 2;
  TargetList out;
  out.present = ground_truth_pool(keyphrases.present, half, "present");
  out.absent = ground_truth_pool(keyphrases.absent, half, "absent");
  if (use_kwp) {
    // Pool entries are excluded too so a group never holds a duplicate.
    std::vector<TokenSeq> skip = excluded;
    for (const auto& e : out.present) skip.push_back(e.tokens);
    for (auto& k : padding_keywords(keywords, skip)) {
      if (out.present.size() >= half) break;
      out.present.push_back({std::move(k.tokens), TargetOrigin::kKeyword});
    }
  }
  out.present.resize(half);
  out.absent.resize(half);
  return out;
}

TargetList kwp_build_targets(const KeyphraseSet& keyphrases, const std::vector<KeywordSpan>& keywords, std::size_t N,
                             bool use_kwp) {
  return kwp_build_targets(keyphrases, keywords, N, keyphrases.present, use_kwp);
}

// ---- losses ---------------------------------------------------------------------------

std::array<double, 3> kwe_class_weights(const std::vector<BioSequence>& batch) {
  std::array<double, 3> count{0, 0, 0};
  for (const auto& seq : batch)
    for (Bio b : seq) count[static_cast<std::size_t>(b)] += 1;
  std::array<double, 3> w{};
  for (std::size_t c = 0; c < 3; ++c) w[c] = 1.0 / std::max(count[c], 1.0);
  return w;
}

Var loss_kwe(Var p_w, const BioSequence& targets, const std::array<double, 3>& xi, double normalizer) {
  if (p_w.value().rows() != targets.size()) throw ShapeError("loss_kwe: label count differs from rows");
  if (!(normalizer > 0)) throw Error("loss_kwe: normalizer must be positive");
  std::vector<int> idx(targets.size());
  std::vector<double> w(targets.size());
  for (std::size_t s = 0; s < targets.size(); ++s) {
    idx[s] = static_cast<int>(targets[s]);
    w[s] = xi[static_cast<std::size_t>(targets[s])] / normalizer;
  }
  return cross_entropy_rows(p_w, std::move(idx), std::move(w));
}

Var loss_kwe(Var p_w, const BioSequence& targets) {
  return loss_kwe(p_w, targets, kwe_class_weights({targets}), static_cast<double>(targets.size()));
}

double target_weight(const TargetEntry& entry, const KgWeights& w) {
  switch (entry.origin) {
    case TargetOrigin::kNull: return w.lambda_null;
    case TargetOrigin::kKeyword: return w.lambda_w;
    case TargetOrigin::kGroundTruth: return 1.0;
  }
  return 1.0;
}

Var loss_kg(Tape& tape, const Model& model, const Vocabulary& vocab, Var h_enc, const SlotKeywords& keywords,
            const std::vector<TargetEntry>& assigned, const KgWeights& weights) {
  const std::size_t N = model.config().N;
  if (assigned.size() != N) throw Error("loss_kg: need one target per slot");
  std::vector<std::vector<int>> seqs(N);
  std::size_t L = 0;
  for (std::size_t n = 0; n < N; ++n) {
    seqs[n] = target_ids(assigned[n], vocab);
    seqs[n].push_back(kEos);
    L = std::max(L, seqs[n].size());
  }
  std::vector<std::vector<int>> inputs(N, std::vector<int>(L, kPad));
  std::vector<int> targets(N * L, kPad);
  std::vector<double> w(N * L, 0.0);
  for (std::size_t n = 0; n < N; ++n) {
    double xi = target_weight(assigned[n], weights);
    for (std::size_t t = 0; t < seqs[n].size(); ++t) {
      if (t + 1 < L) inputs[n][t + 1] = seqs[n][t];
      targets[n * L + t] = seqs[n][t];
      w[n * L + t] = xi;
    }
  }
  Var p = model.decode(tape, h_enc, inputs, keywords);
  return cross_entropy_rows(p, std::move(targets), std::move(w));
}

double loss_encoder_stage3(double l1_w, const std::vector<double>& inner_losses, double lambda_g) {
  if (inner_losses.empty()) throw Error("loss_encoder_stage3: no inner losses");
  double s = std::accumulate(inner_losses.begin(), inner_losses.end(), 0.0);
  return l1_w + lambda_g * s / static_cast<double>(inner_losses.size());
}

std::vector<TargetEntry> assigned_targets(const TargetList& targets, const SlotAssignment& a) {
  std::vector<TargetEntry> out;
  for (std::size_t n = 0; n < a.present.perm.size(); ++n) out.push_back(targets.present[a.present.perm[n]]);
  for (std::size_t n = 0; n < a.absent.perm.size(); ++n) out.push_back(targets.absent[a.absent.perm[n]]);
  return out;
}

// ---- examples -------------------------------------------------------------------------

Vocabulary build_vocabulary(const std::vector<MultiLevelDocument>& docs) {
  std::vector<TokenSeq> seqs{prompt_template_tokens()};
  for (const auto& d : docs) {
    for (const auto& s : d.segments) seqs.push_back(s.tokens);
    for (const auto& k : d.keyphrases.all()) seqs.push_back(k);
  }
  return Vocabulary::build(seqs);
}

std::vector<TrainExample> build_examples(const std::vector<MultiLevelDocument>& docs, const Vocabulary& vocab,
                                         const ModelConfig& config) {
  std::vector<TrainExample> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& doc = docs[d];
    std::vector<TokenSeq> previous;
    for (std::size_t i = 0; i < doc.segments.size(); ++i) {
      const auto& seg = doc.segments[i];
      TrainExample ex;
      ex.doc = d;
      ex.level = seg.level_index;
      std::size_t n = std::min(seg.tokens.size(), config.max_input_len);
      ex.body.assign(seg.tokens.begin(), seg.tokens.begin() + static_cast<std::ptrdiff_t>(n));
      ex.body_ids = vocab.encode(ex.body);
      ex.keywords = derive_keywords(ex.body, doc.keyphrases);
      ex.bio = bio_labels(ex.body, ex.keywords);
      for (const auto& k : doc.keyphrases.present)
        if (contains_run(ex.body, k)) ex.targets.present.push_back(k);
      ex.targets.absent = doc.keyphrases.absent;
      for (const auto& k : ex.targets.all())
        if (k.size() >= config.m)
          throw Error("document " + doc.doc_id + ": keyphrase `" + join(k) + "` needs more than max_kp_len decode steps");
      // Level 1 is prompted with its own keywords; later levels with the
      // previous level's keyphrases.
      if (i == 0)
        for (const auto& k : ex.keywords) previous.push_back(k.tokens);
      ex.input = make_prompted_input(previous, seg.tokens, config.max_input_len);
      ex.input_ids = vocab.encode(ex.input.tokens());
      previous = ex.targets.all();
      out.push_back(std::move(ex));
    }
  }
  return out;
}

// ---- schedule -------------------------------------------------------------------------

namespace {

void require_finite(double v, const char* what, std::size_t epoch) {
  if (!std::isfinite(v))
    throw Error(std::string("training diverged: ") + what + " is not finite at epoch " + std::to_string(epoch));
}

void probe(const Model& model, const Vocabulary& vocab, const TrainHooks& hooks, LossReport& report) {
  if (hooks.probe.empty()) return;
  double nr = 0.0, dup = 0.0;
  for (const auto* doc : hooks.probe) {
    const auto& seg = doc->segments.front().tokens;
    auto kw = extract_keywords(model, vocab, seg);
    auto by_start = kw.predicted;
    std::stable_sort(by_start.begin(), by_start.end(),
                     [](const KeywordSpan& a, const KeywordSpan& b) { return a.start < b.start; });
    std::vector<TokenSeq> previous;
    for (const auto& k : by_start) previous.push_back(k.tokens);
    auto raw = generate_slots(model, vocab, make_prompted_input(previous, seg, model.config().max_input_len), kw.slots);
    nr += null_ratio(raw);
    dup += duplication_ratio(raw);
  }
  report.null_ratio = nr / static_cast<double>(hooks.probe.size());
  report.duplication = dup / static_cast<double>(hooks.probe.size());
}

void phase(const TrainHooks& hooks, const char* name, bool before) {
  if (hooks.on_phase) hooks.on_phase(name, before);
}

}  // namespace

std::vector<LossReport> tsmt_train(Model& model, const Vocabulary& vocab, const std::vector<MultiLevelDocument>& docs,
                                   const TsmtConfig& config, const TrainHooks& hooks) {
  config.validate();
  const auto& mc = model.config();
  if (vocab.size() != mc.vocab_size) throw Error("vocabulary size does not match the model");
  auto examples = build_examples(docs, vocab, mc);
  if (examples.empty()) throw Error("training corpus has no segments");

  ParameterStore& params = model.params();
  AdamW opt(params, AdamW::Options{});
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), 0);
  const KgWeights kg_weights{config.lambda_null, config.lambda_w};

  std::vector<LossReport> reports;
  for (std::size_t epoch = 1; epoch <= config.E; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossReport rep;
    rep.epoch = epoch;
    const bool stage1 = epoch <= config.E1;
    rep.stage = stage1 ? "1" : "2+3";
    double l1_sum = 0.0, lg_sum = 0.0, l2_sum = 0.0;
    std::size_t n_batches = 0;

    for (std::size_t b0 = 0; b0 < order.size(); b0 += config.batch) {
      std::vector<const TrainExample*> batch;
      for (std::size_t i = b0; i < std::min(order.size(), b0 + config.batch); ++i) batch.push_back(&examples[order[i]]);
      const double B = static_cast<double>(batch.size());
      std::vector<BioSequence> bios;
      double total_tokens = 0.0;
      for (const auto* ex : batch) {
        bios.push_back(ex->bio);
        total_tokens += static_cast<double>(ex->bio.size());
      }
      const auto xi = kwe_class_weights(bios);
      ++n_batches;

      if (stage1) {
        phase(hooks, "stage1", true);
        params.zero_grad();
        Tape tape(GradMode::encoder_only());
        std::vector<Var> parts;
        for (const auto* ex : batch)
          parts.push_back(loss_kwe(model.kwe_forward(tape, model.encode(tape, ex->body_ids)), ex->bio, xi, total_tokens));
        Var loss = parts[0];
        for (std::size_t i = 1; i < parts.size(); ++i) loss = add(loss, parts[i]);
        double l1 = loss.value().item();
        require_finite(l1, "L1_W", epoch);
        tape.backward(loss);
        opt.step(ParamGroup::kEncoder, config.alpha_w);
        l1_sum += l1;
        phase(hooks, "stage1", false);
        continue;
      }

      // The encoder is frozen for the inner epochs, so its forward pass (and
      // the tape holding it) stays valid for the stage-3 update.
      params.zero_grad();
      Tape enc(GradMode::encoder_only());
      std::vector<Var> h_prompted;
      std::vector<Var> l1_parts;
      std::vector<SlotKeywords> slot_kw;
      std::vector<TargetList> targets;
      std::vector<std::vector<std::vector<int>>> present_ids, absent_ids;
      for (const auto* ex : batch) {
        Var pw = model.kwe_forward(enc, model.encode(enc, ex->body_ids));
        l1_parts.push_back(loss_kwe(pw, ex->bio, xi, total_tokens));
        h_prompted.push_back(model.encode(enc, ex->input_ids));
        auto predicted = predict_keywords(pw.value(), ex->body, ex->body.size());
        std::vector<std::vector<int>> ranked;
        for (const auto& k : predicted) ranked.push_back(vocab.encode(k.tokens));
        slot_kw.push_back(model.slot_keywords(ranked));
        // A padding target must fit in m decode steps including EOS.
        std::vector<KeywordSpan> fits;
        for (const auto& k : predicted)
          if (k.tokens.size() < mc.m) fits.push_back(k);
        targets.push_back(kwp_build_targets(ex->targets, fits, mc.N, config.use_kwp));
        std::vector<std::vector<int>> p, a;
        for (const auto& e : targets.back().present) p.push_back(target_ids(e, vocab));
        for (const auto& e : targets.back().absent) a.push_back(target_ids(e, vocab));
        present_ids.push_back(std::move(p));
        absent_ids.push_back(std::move(a));
      }
      Var l1 = l1_parts[0];
      for (std::size_t i = 1; i < l1_parts.size(); ++i) l1 = add(l1, l1_parts[i]);
      require_finite(l1.value().item(), "L1_W", epoch);

      std::vector<Tensor> grad_h;
      for (const auto& h : h_prompted) grad_h.emplace_back(h.value().shape());
      std::vector<double> inner;
      for (std::size_t e = 0; e < config.E2; ++e) {
        phase(hooks, "stage2", true);
        params.zero_grad();
        double lg = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
          const Tensor& hv = h_prompted[i].value();
          auto sa = assign(model, hv, slot_kw[i], present_ids[i], absent_ids[i], mc.k);
          Tape dec(GradMode::decoder_only());
          Var h = dec.leaf(hv, true);
          Var loss = loss_kg(dec, model, vocab, h, slot_kw[i], assigned_targets(targets[i], sa), kg_weights);
          double v = loss.value().item();
          require_finite(v, "L_G", epoch);
          lg += v / B;
          dec.backward(scale(loss, 1.0 / B));
          Tensor g = dec.grad(h);
          for (std::size_t j = 0; j < g.size(); ++j) grad_h[i][j] += g[j];
        }
        opt.step(ParamGroup::kDecoder, config.alpha_g);
        inner.push_back(lg);
        phase(hooks, "stage2", false);
      }

      // Stage 3: L2_W = L1_W + lambda_G * mean_e L_G^e. Each L_G^e reaches the
      // encoder only through H_E, so its gradient is dL_G^e/dH_E pulled back
      // through the recorded encoder pass.
      phase(hooks, "stage3", true);
      params.zero_grad();
      Var total = l1;
      const double coef = config.lambda_g / static_cast<double>(config.E2);
      for (std::size_t i = 0; i < batch.size(); ++i)
        total = add(total, scale(dot_constant(h_prompted[i], grad_h[i]), coef));
      enc.backward(total);
      opt.step(ParamGroup::kEncoder, config.alpha_w);
      phase(hooks, "stage3", false);

      double l1v = l1.value().item();
      l1_sum += l1v;
      lg_sum += std::accumulate(inner.begin(), inner.end(), 0.0) / static_cast<double>(inner.size());
      l2_sum += loss_encoder_stage3(l1v, inner, config.lambda_g);
    }

    rep.l1_w = l1_sum / static_cast<double>(n_batches);
    if (!stage1) {
      rep.l_g = lg_sum / static_cast<double>(n_batches);
      rep.l2_w = l2_sum / static_cast<double>(n_batches);
    }
    probe(model, vocab, hooks, rep);
    reports.push_back(rep);
    if (hooks.on_epoch) hooks.on_epoch(rep);
  }
  return reports;
}

// ---- config files ---------------------------------------------------------------------

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  auto trim = [](std::string s) {
    auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++n;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected `key = value`", n);
    auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", n);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace kappa
