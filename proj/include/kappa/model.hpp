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

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kappa/autodiff.hpp"
#include "kappa/keywords.hpp"
#include "kappa/parameters.hpp"

namespace kappa {

struct ModelConfig {
  std::size_t d = 64;
  std::size_t n_heads = 4;
  std::size_t n_enc_layers = 2;
  std::size_t n_dec_layers = 2;
  std::size_t vocab_size = 0;
  std::size_t N = 8;
  std::size_t k = 2;
  std::size_t N_K = 3;
  std::size_t m = 8;
  int rpe_buckets = 32;
  int rpe_max_distance = 128;
  std::size_t ffn_width = 128;
  std::size_t max_input_len = 128;
  bool use_kcc = true;

  std::size_t half() const { return N / 2; }
  void validate() const;
  std::string to_json() const;
  static ModelConfig from_json(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Keyword token ids guiding each slot; an empty entry means no keyword.
using SlotKeywords = std::vector<std::vector<int>>;

class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  // S x d encoder states.
  Var encode(Tape& tape, const std::vector<int>& ids) const;
  // S x 3 distributions over {B, I, O}.
  Var kwe_forward(Tape& tape, Var h_enc) const;

  // Teacher-forced pass over all N slots. inputs[n] holds w^0..w^{L-1} for
  // slot n (same L for all slots). Returns (N*L) x |V| next-token
  // distributions; row n*L + (t-1) is p^t_n.
  Var decode(Tape& tape, Var h_enc, const std::vector<std::vector<int>>& inputs, const SlotKeywords& keywords) const;

  // e(C_n) plus the summed decoder embeddings of the keyword tokens.
  std::vector<double> control_embedding(const std::vector<int>& keyword_ids, std::size_t slot) const;

  // The top N_K keywords go to the first N_K slots of both groups.
  SlotKeywords slot_keywords(const std::vector<std::vector<int>>& ranked_keywords) const;

 private:
  struct Attn {
    Parameter *wq, *wk, *wv, *wo;
  };
  struct Norm {
    Parameter *g, *b;
  };
  struct Ffn {
    Parameter *w1, *b1, *w2, *b2;
  };
  struct EncLayer {
    Norm ln1, ln2;
    Attn self;
    Ffn ffn;
  };
  struct DecLayer {
    Norm ln1, ln2, ln3;
    Attn self, cross;
    Ffn ffn;
  };

  Parameter* add_param(const std::string& name, Tensor value, ParamGroup group, bool decay);
  Attn make_attn(const std::string& prefix, ParamGroup group, std::mt19937_64& rng);
  Norm make_norm(const std::string& prefix, ParamGroup group);
  Ffn make_ffn(const std::string& prefix, ParamGroup group, std::mt19937_64& rng);

  Var attention(Tape& tape, Var q_in, Var kv_in, const Attn& a, Parameter* rpe,
                std::shared_ptr<const std::vector<int>> buckets,
                std::shared_ptr<const std::vector<std::uint8_t>> mask) const;
  Var norm(Tape& tape, Var x, const Norm& n) const;
  Var ffn(Tape& tape, Var x, const Ffn& f) const;

  ModelConfig config_;
  ParameterStore params_;
  Parameter *enc_embed_, *enc_rpe_, *kwe_w_, *kwe_b_;
  Parameter *dec_embed_, *dec_codes_, *dec_rpe_, *kg_w_, *kg_b_;
  Norm enc_final_, dec_final_;
  std::vector<EncLayer> enc_layers_;
  std::vector<DecLayer> dec_layers_;
};

// Attention logits (QK^T + rho) divided by sqrt(d_head).
Var scale_logits(Var logits, std::size_t d_head);

// BIO-decodes argmax labels of p_W. Confidence is the mean over span tokens of
// max(p_B, p_I). Identical token sequences keep their best occurrence. Ranked
// by confidence, ties to the earlier start; at most limit entries.
std::vector<KeywordSpan> predict_keywords(const Tensor& p_w, const TokenSeq& segment, std::size_t limit);

// Argmax label per row of an S x 3 distribution.
BioSequence argmax_labels(const Tensor& p_w);

}  // namespace kappa
