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

#include <string>
#include <unordered_map>
#include <vector>

#include "kappa/text.hpp"

namespace kappa {

// Reserved ids. The null token marks a slot with no keyphrase.
enum SpecialToken : int {
  kPad = 0,
  kBos = 1,
  kEos = 2,
  kSep = 3,
  kNull = 4,
  kUnk = 5,
  kDigit = 6,
};
inline constexpr int kNumSpecials = 7;
inline constexpr std::string_view kNullText = "<null>";

class Vocabulary {
 public:
  Vocabulary();

  // Adds tokens in first-seen order (min frequency 1).
  static Vocabulary build(const std::vector<TokenSeq>& sequences);

  int add(const std::string& token);
  int id(const std::string& token) const;  // kUnk when unknown
  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  const std::string& token(int id) const;
  std::size_t size() const { return tokens_.size(); }

  std::vector<int> encode(const TokenSeq& tokens) const;
  TokenSeq decode(const std::vector<int>& ids) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace kappa
