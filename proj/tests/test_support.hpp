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

#include "kappa/model.hpp"
#include "kappa/synth.hpp"
#include "kappa/training.hpp"
#include "kappa/vocabulary.hpp"

namespace kappa::testing {

// Small model used across tests: d=16, one layer each side unless asked.
inline ModelConfig tiny_config(std::size_t vocab_size, std::size_t layers = 1) {
  ModelConfig c;
  c.d = 16;
  c.n_heads = 2;
  c.n_enc_layers = layers;
  c.n_dec_layers = layers;
  c.vocab_size = vocab_size;
  c.N = 4;
  c.k = 2;
  c.N_K = 1;
  c.m = 6;
  c.rpe_buckets = 8;
  c.rpe_max_distance = 16;
  c.ffn_width = 32;
  c.max_input_len = 96;
  return c;
}

inline Vocabulary numbered_vocab(std::size_t n_words) {
  std::vector<TokenSeq> seqs(1);
  for (std::size_t i = 0; i < n_words; ++i) seqs[0].push_back("w" + std::to_string(i));
  return Vocabulary::build(seqs);
}

}  // namespace kappa::testing
