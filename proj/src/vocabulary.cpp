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

#include "kappa/vocabulary.hpp"

#include "kappa/error.hpp"

namespace kappa {

Vocabulary::Vocabulary() {
  for (const char* s : {"<pad>", "<bos>", "<eos>", "[sep]", "<null>", "<unk>", "[digit]"}) add(s);
}

Vocabulary Vocabulary::build(const std::vector<TokenSeq>& sequences) {
  Vocabulary v;
  for (const auto& seq : sequences)
    for (const auto& t : seq) v.add(t);
  return v;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  Vocabulary v;
  if (tokens.size() < static_cast<std::size_t>(kNumSpecials)) throw Error("vocabulary is missing special tokens");
  for (int i = 0; i < kNumSpecials; ++i)
    if (tokens[i] != v.tokens_[i]) throw Error("vocabulary special token mismatch at id " + std::to_string(i));
  for (std::size_t i = kNumSpecials; i < tokens.size(); ++i) {
    if (v.contains(tokens[i])) throw Error("duplicate vocabulary token: " + tokens[i]);
    v.add(tokens[i]);
  }
  return v;
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size())
    throw Error("token id out of range: " + std::to_string(id));
  return tokens_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const TokenSeq& tokens) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(id(t));
  return out;
}

TokenSeq Vocabulary::decode(const std::vector<int>& ids) const {
  TokenSeq out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

}  // namespace kappa
