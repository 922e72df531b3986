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
#include <vector>

#include "kappa/document.hpp"

namespace kappa {

struct KeywordSpan {
  TokenSeq tokens;
  std::size_t start = 0;
  double confidence = 1.0;

  friend bool operator==(const KeywordSpan&, const KeywordSpan&) = default;
};

enum class Bio : std::uint8_t { B = 0, I = 1, O = 2 };
using BioSequence = std::vector<Bio>;

char bio_char(Bio b);

// Maximal contiguous runs of the segment that are also a contiguous sub-run of
// some keyphrase. One entry per distinct token sequence, at its first
// occurrence, ordered by that position.
std::vector<KeywordSpan> derive_keywords(const TokenSeq& segment, const KeyphraseSet& keyphrases);

// Labels every occurrence of every span. Where occurrences overlap, longer
// spans win, then earlier starts.
BioSequence bio_labels(const TokenSeq& segment, const std::vector<KeywordSpan>& spans);

// Decodes B I* runs. A stray I (after O or at the start) is ignored.
std::vector<KeywordSpan> recover_spans(const TokenSeq& segment, const BioSequence& labels);

}  // namespace kappa
