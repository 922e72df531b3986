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
#include <string>
#include <vector>

#include "kappa/document.hpp"

namespace kappa {

// Knobs for the synthetic generator. Every present keyphrase comes from a
// fixed lexicon; each lexicon phrase maps to one absent concept phrase whose
// modifier never appears in any text and whose head word is shared with the
// filler vocabulary. Title phrases contribute their concepts as absent
// keyphrases, and the first title phrase's concept fixes the label.
struct SynthProfile {
  std::size_t max_segment_tokens = kDefaultMaxSegmentTokens;
  std::size_t min_present = 2;
  std::size_t max_present = 4;
  // Chance that a non-title phrase is drawn regardless of the label.
  double off_topic = 0.5;
};

struct SynthLexiconEntry {
  std::string phrase;
  std::string absent_phrase;
  std::string label;
};

const std::vector<SynthLexiconEntry>& synth_lexicon();

std::vector<DocumentRecord> synth_records(std::uint64_t seed, std::size_t n_docs, const SynthProfile& profile = {});
std::vector<MultiLevelDocument> synth_corpus(std::uint64_t seed, std::size_t n_docs, const SynthProfile& profile = {});

}  // namespace kappa
