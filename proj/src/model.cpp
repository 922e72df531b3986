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

#include "kappa/model.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>

#include "kappa/error.hpp"
#include "kappa/position.hpp"
#include "kappa/vocabulary.hpp"

namespace kappa {

using nlohmann::json;

namespace {

constexpr double kEmbedBound = 0.08;

}  // namespace

void ModelConfig::validate() const {
  if (d == 0 || d % 2 != 0) throw Error("model width d must be positive and even");
  if (n_heads == 0 || d % n_heads != 0) throw Error("d must be divisible by n_heads");
  if (N == 0 || N % 2 != 0) throw Error("slot count N must be positive and even");
  if (N_K >= N / 2) throw Error("N_K must be smaller than N/2");
  if (k == 0) throw Error("k must be at least 1");
  if (m == 0) throw Error("m must be at least 1");
  if (vocab_size <= static_cast<std::size_t>(kNumSpecials)) throw Error("vocabulary has no ordinary tokens");
  if (rpe_buckets < 4 || rpe_buckets % 2 != 0) throw Error("rpe_buckets must be even and at least 4");
  if (rpe_max_distance <= rpe_buckets / 4) throw Error("rpe_max_distance too small for the bucket count");
  if (ffn_width == 0 || max_input_len == 0) throw Error("ffn_width and max_input_len must be positive");
}

std::string ModelConfig::to_json() const {
  json j = {{"d", d},
            {"n_heads", n_heads},
            {"n_enc_layers", n_enc_layers},
            {"n_dec_layers", n_dec_layers},
            {"vocab_size", vocab_size},
            {"N", N},
            {"k", k},
            {"N_K", N_K},
            {"m", m},
            {"rpe_buckets", rpe_buckets},
            {"rpe_max_distance", rpe_max_distance},
            {"ffn_width", ffn_width},
            {"max_input_len", max_input_len},
            {"use_kcc", use_kcc}};
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  json j = json::parse(text);
  ModelConfig c;
  c.d = j.at("d");
  c.n_heads = j.at("n_heads");
  c.n_enc_layers = j.at("n_enc_layers");
  c.n_dec_layers = j.at("n_dec_layers");
  c.vocab_size = j.at("vocab_size");
  c.N = j.at("N");
  c.k = j.at("k");
  c.N_K = j.at("N_K");
  c.m = j.at("m");
  c.rpe_buckets = j.at("rpe_buckets");
  c.rpe_max_distance = j.at("rpe_max_distance");
  c.ffn_width = j.at("ffn_width");
  c.max_input_len = j.at("max_input_len");
  c.use_kcc = j.at("use_kcc");
  c.validate();
  return c;
}

// ---- construction -----------------------------------------------------------------

Parameter* Model::add_param(const std::string& name, Tensor value, ParamGroup group, bool decay) {
  return &params_.add(name, std::move(value), group, decay);
}

Model::Attn Model::make_attn(const std::string& prefix, ParamGroup group, std::mt19937_64& rng) {
  std::size_t d = config_.d;
  Attn a{};
  a.wq = add_param(prefix + ".wq", init_scaled_normal({d, d}, d, rng), group, true);
  a.wk = add_param(prefix + ".wk", init_scaled_normal({d, d}, d, rng), group, true);
  a.wv = add_param(prefix + ".wv", init_scaled_normal({d, d}, d, rng), group, true);
  a.wo = add_param(prefix + ".wo", init_scaled_normal({d, d}, d, rng), group, true);
  return a;
}

Model::Norm Model::make_norm(const std::string& prefix, ParamGroup group) {
  Norm n{};
  n.g = add_param(prefix + ".g", Tensor({1, config_.d}, 1.0), group, false);
  n.b = add_param(prefix + ".b", Tensor({1, config_.d}, 0.0), group, false);
  return n;
}

Model::Ffn Model::make_ffn(const std::string& prefix, ParamGroup group, std::mt19937_64& rng) {
  std::size_t d = config_.d, f = config_.ffn_width;
  Ffn o{};
  o.w1 = add_param(prefix + ".w1", init_scaled_normal({d, f}, d, rng), group, true);
  o.b1 = add_param(prefix + ".b1", Tensor({1, f}, 0.0), group, false);
  o.w2 = add_param(prefix + ".w2", init_scaled_normal({f, d}, f, rng), group, true);
  o.b2 = add_param(prefix + ".b2", Tensor({1, d}, 0.0), group, false);
  return o;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  config_.validate();
  std::mt19937_64 rng(seed);
  const std::size_t d = config_.d, V = config_.vocab_size, H = config_.n_heads;
  const auto B = static_cast<std::size_t>(config_.rpe_buckets);
  const auto enc = ParamGroup::kEncoder, dec = ParamGroup::kDecoder;

  enc_embed_ = add_param("enc.embed", init_uniform({V, d}, kEmbedBound, rng), enc, false);
  enc_rpe_ = add_param("enc.rpe", init_uniform({B, H}, kEmbedBound, rng), enc, false);
  for (std::size_t l = 0; l < config_.n_enc_layers; ++l) {
    std::string p = "enc.layer" + std::to_string(l);
    EncLayer L;
    L.ln1 = make_norm(p + ".ln1", enc);
    L.self = make_attn(p + ".self", enc, rng);
    L.ln2 = make_norm(p + ".ln2", enc);
    L.ffn = make_ffn(p + ".ffn", enc, rng);
    enc_layers_.push_back(L);
  }
  enc_final_ = make_norm("enc.ln_f", enc);
  kwe_w_ = add_param("kwe.w", init_scaled_normal({d, 3}, d, rng), enc, true);
  kwe_b_ = add_param("kwe.b", Tensor({1, 3}, 0.0), enc, false);

  dec_embed_ = add_param("dec.embed", init_uniform({V, d}, kEmbedBound, rng), dec, false);
  dec_codes_ = add_param("dec.codes", init_uniform({config_.N, d}, kEmbedBound, rng), dec, false);
  dec_rpe_ = add_param("dec.rpe", init_uniform({B, H}, kEmbedBound, rng), dec, false);
  for (std::size_t l = 0; l < config_.n_dec_layers; ++l) {
    std::string p = "dec.layer" + std::to_string(l);
    DecLayer L;
    L.ln1 = make_norm(p + ".ln1", dec);
    L.self = make_attn(p + ".self", dec, rng);
    L.ln2 = make_norm(p + ".ln2", dec);
    L.cross = make_attn(p + ".cross", dec, rng);
    L.ln3 = make_norm(p + ".ln3", dec);
    L.ffn = make_ffn(p + ".ffn", dec, rng);
    dec_layers_.push_back(L);
  }
  dec_final_ = make_norm("dec.ln_f", dec);
  kg_w_ = add_param("kg.w", init_scaled_normal({d, V}, d, rng), dec, true);
  kg_b_ = add_param("kg.b", Tensor({1, V}, 0.0), dec, false);
}

// ---- blocks -------------------------------------------------------------------------

Var Model::norm(Tape& tape, Var x, const Norm& n) const {
  return layer_norm(x, tape.param(*n.g), tape.param(*n.b));
}

Var Model::ffn(Tape& tape, Var x, const Ffn& f) const {
  Var h = gelu(add_row(matmul(x, tape.param(*f.w1)), tape.param(*f.b1)));
  return add_row(matmul(h, tape.param(*f.w2)), tape.param(*f.b2));
}

Var scale_logits(Var logits, std::size_t d_head) {
  if (d_head == 0) throw Error("scale_logits: zero head width");
  return scale(logits, 1.0 / std::sqrt(static_cast<double>(d_head)));
}

Var Model::attention(Tape& tape, Var q_in, Var kv_in, const Attn& a, Parameter* rpe,
                     std::shared_ptr<const std::vector<int>> buckets,
                     std::shared_ptr<const std::vector<std::uint8_t>> mask) const {
  const std::size_t H = config_.n_heads, dh = config_.d / H;
  Var q = matmul(q_in, tape.param(*a.wq));
  Var k = matmul(kv_in, tape.param(*a.wk));
  Var v = matmul(kv_in, tape.param(*a.wv));
  std::optional<Var> table;
  if (rpe) table = tape.param(*rpe);
  std::vector<Var> heads;
  heads.reserve(H);
  for (std::size_t h = 0; h < H; ++h) {
    Var logits = matmul_nt(slice_cols(q, h * dh, dh), slice_cols(k, h * dh, dh));
    if (table) logits = add_bucket_bias(logits, *table, buckets, h);
    logits = scale_logits(logits, dh);
    Var p = mask ? masked_softmax(logits, mask) : softmax(logits, 1);
    heads.push_back(matmul(p, slice_cols(v, h * dh, dh)));
  }
  Var cat = H == 1 ? heads[0] : concat_cols(heads);
  return matmul(cat, tape.param(*a.wo));
}

// ---- encoder ------------------------------------------------------------------------

Var Model::encode(Tape& tape, const std::vector<int>& ids) const {
  const std::size_t S = ids.size();
  if (S == 0) throw Error("encode: empty input");
  if (S > config_.max_input_len)
    throw Error("encode: input length " + std::to_string(S) + " exceeds " + std::to_string(config_.max_input_len));
  for (int id : ids)
    if (id < 0 || static_cast<std::size_t>(id) >= config_.vocab_size) throw Error("encode: token id out of range");

  auto buckets = std::make_shared<std::vector<int>>(S * S);
  for (std::size_t u = 0; u < S; ++u)
    for (std::size_t v = 0; v < S; ++v)
      (*buckets)[u * S + v] = dope_rpe_bucket(static_cast<long>(u), static_cast<long>(v), config_.rpe_buckets,
                                              config_.rpe_max_distance, true);

  Var x = gather_rows(tape.param(*enc_embed_), ids);
  for (const auto& L : enc_layers_) {
    Var h = norm(tape, x, L.ln1);
    x = add(x, attention(tape, h, h, L.self, enc_rpe_, buckets, nullptr));
    x = add(x, ffn(tape, norm(tape, x, L.ln2), L.ffn));
  }
  return norm(tape, x, enc_final_);
}

Var Model::kwe_forward(Tape& tape, Var h_enc) const {
  return softmax(add_row(matmul(h_enc, tape.param(*kwe_w_)), tape.param(*kwe_b_)), 1);
}

// ---- decoder ------------------------------------------------------------------------

SlotKeywords Model::slot_keywords(const std::vector<std::vector<int>>& ranked) const {
  SlotKeywords out(config_.N);
  if (!config_.use_kcc) return out;
  std::size_t n = std::min(config_.N_K, ranked.size());
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = ranked[i];
    out[config_.half() + i] = ranked[i];
  }
  return out;
}

std::vector<double> Model::control_embedding(const std::vector<int>& keyword_ids, std::size_t slot) const {
  if (slot >= config_.N) throw Error("control_embedding: slot out of range");
  const std::size_t d = config_.d;
  std::vector<double> e(d);
  const Tensor& codes = dec_codes_->value;
  const Tensor& emb = dec_embed_->value;
  for (std::size_t j = 0; j < d; ++j) e[j] = codes.at(slot, j);
  for (int id : keyword_ids)
    for (std::size_t j = 0; j < d; ++j) e[j] += emb.at(static_cast<std::size_t>(id), j);
  return e;
}

Var Model::decode(Tape& tape, Var h_enc, const std::vector<std::vector<int>>& inputs,
                  const SlotKeywords& keywords) const {
  const std::size_t N = config_.N, d = config_.d;
  if (inputs.size() != N) throw Error("decode: expected one input sequence per slot");
  if (keywords.size() != N) throw Error("decode: expected one keyword entry per slot");
  const std::size_t L = inputs[0].size();
  if (L == 0) throw Error("decode: empty slot input");
  if (L > config_.m + 1) throw Error("decode: step " + std::to_string(L) + " exceeds m");
  for (const auto& in : inputs)
    if (in.size() != L) throw Error("decode: slots must share the same step");
  const std::size_t R = N * L;

  // Token bag per row: the previous token plus (with KCC) the keyword tokens.
  std::vector<std::vector<int>> bags(R);
  std::vector<int> slot_of(R);
  Tensor ape({R, d});
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t t = 0; t < L; ++t) {
      std::size_t r = n * L + t;
      int w = inputs[n][t];
      if (w < 0 || static_cast<std::size_t>(w) >= config_.vocab_size) throw Error("decode: token id out of range");
      bags[r].push_back(w);
      if (config_.use_kcc) bags[r].insert(bags[r].end(), keywords[n].begin(), keywords[n].end());
      slot_of[r] = static_cast<int>(n);
      auto pe = dope_ape(t + 1, d);
      std::copy(pe.begin(), pe.end(), ape.data().begin() + static_cast<std::ptrdiff_t>(r * d));
    }
  }

  auto mask = std::make_shared<std::vector<std::uint8_t>>(R * R, 0);
  auto buckets = std::make_shared<std::vector<int>>(R * R, 0);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t t1 = 0; t1 < L; ++t1)
      for (std::size_t t2 = 0; t2 <= t1; ++t2) {
        std::size_t idx = (n * L + t1) * R + n * L + t2;
        (*mask)[idx] = 1;
        (*buckets)[idx] = dope_rpe_bucket(static_cast<long>(t1), static_cast<long>(t2), config_.rpe_buckets,
                                          config_.rpe_max_distance, false);
      }

  Var x = embedding_bag(tape.param(*dec_embed_), std::move(bags));
  x = add(x, gather_rows(tape.param(*dec_codes_), slot_of));
  x = add(x, tape.constant(std::move(ape)));
  for (const auto& Ly : dec_layers_) {
    Var h = norm(tape, x, Ly.ln1);
    x = add(x, attention(tape, h, h, Ly.self, dec_rpe_, buckets, mask));
    x = add(x, attention(tape, norm(tape, x, Ly.ln2), h_enc, Ly.cross, nullptr, nullptr, nullptr));
    x = add(x, ffn(tape, norm(tape, x, Ly.ln3), Ly.ffn));
  }
  Var h = norm(tape, x, dec_final_);
  return softmax(add_row(matmul(h, tape.param(*kg_w_)), tape.param(*kg_b_)), 1);
}

// ---- keyword decoding ---------------------------------------------------------------

BioSequence argmax_labels(const Tensor& p_w) {
  if (p_w.cols() != 3) throw ShapeError("argmax_labels: expected S x 3, got " + shape_to_string(p_w.shape()));
  BioSequence out(p_w.rows());
  for (std::size_t s = 0; s < p_w.rows(); ++s) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 3; ++c)
      if (p_w.at(s, c) > p_w.at(s, best)) best = c;
    out[s] = static_cast<Bio>(best);
  }
  return out;
}

std::vector<KeywordSpan> predict_keywords(const Tensor& p_w, const TokenSeq& segment, std::size_t limit) {
  if (p_w.rows() != segment.size()) throw ShapeError("predict_keywords: distribution rows differ from segment length");
  auto spans = recover_spans(segment, argmax_labels(p_w));
  for (auto& sp : spans) {
    double c = 0.0;
    for (std::size_t i = sp.start; i < sp.start + sp.tokens.size(); ++i)
      c += std::max(p_w.at(i, static_cast<std::size_t>(Bio::B)), p_w.at(i, static_cast<std::size_t>(Bio::I)));
    sp.confidence = c / static_cast<double>(sp.tokens.size());
  }
  std::stable_sort(spans.begin(), spans.end(), [](const KeywordSpan& a, const KeywordSpan& b) {
    return a.confidence != b.confidence ? a.confidence > b.confidence : a.start < b.start;
  });
  std::vector<KeywordSpan> out;
  for (auto& sp : spans) {
    if (out.size() >= limit) break;
    bool dup = std::any_of(out.begin(), out.end(), [&](const KeywordSpan& o) { return o.tokens == sp.tokens; });
    if (!dup) out.push_back(std::move(sp));
  }
  return out;
}

}  // namespace kappa
