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
#include <string_view>
#include <vector>

namespace kappa {

using TokenSeq = std::vector<std::string>;

inline constexpr std::string_view kDigitToken = "[digit]";
inline constexpr std::string_view kSepToken = "[sep]";

// Lowercases ASCII, splits on whitespace and punctuation (dropped), and
// replaces every maximal digit run with "[digit]". The literals "[sep]" and
// "[digit]" are recognised as single tokens. Bytes >= 0x80 are kept as word
// characters so UTF-8 words survive intact.
TokenSeq tokenize(std::string_view text);

std::string join(const TokenSeq& tokens, std::string_view sep = " ");

// Splits text into sentences at '.' and ';' and tokenizes each one.
std::vector<TokenSeq> split_sentences(std::string_view text);

}  // namespace kappa
