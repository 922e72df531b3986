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

#include "kappa/text.hpp"

#include <cctype>

namespace kappa {

namespace {

bool is_word_byte(unsigned char c) { return std::isalpha(c) || c >= 0x80; }

bool starts_with_ci(std::string_view text, std::size_t pos, std::string_view lit) {
  if (text.size() - pos < lit.size()) return false;
  for (std::size_t i = 0; i < lit.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(text[pos + i])) != lit[i]) return false;
  return true;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    auto c = static_cast<unsigned char>(text[i]);
    if (c == '[') {
      if (starts_with_ci(text, i, kSepToken)) {
        flush();
        out.emplace_back(kSepToken);
        i += kSepToken.size();
        continue;
      }
      if (starts_with_ci(text, i, kDigitToken)) {
        flush();
        out.emplace_back(kDigitToken);
        i += kDigitToken.size();
        continue;
      }
    }
    if (std::isdigit(c)) {
      flush();
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
      out.emplace_back(kDigitToken);
      continue;
    }
    if (is_word_byte(c)) {
      word.push_back(static_cast<char>(c < 0x80 ? std::tolower(c) : c));
    } else {
      flush();
    }
    ++i;
  }
  flush();
  return out;
}

std::string join(const TokenSeq& tokens, std::string_view sep) {
  std::string s;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) s += sep;
    s += tokens[i];
  }
  return s;
}

std::vector<TokenSeq> split_sentences(std::string_view text) {
  std::vector<TokenSeq> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '.' || text[i] == ';') {
      TokenSeq s = tokenize(text.substr(start, i - start));
      if (!s.empty()) out.push_back(std::move(s));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace kappa
