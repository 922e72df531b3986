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

#include "kappa/keywords.hpp"

#include <algorithm>
#include <set>

#include "kappa/error.hpp"

namespace kappa {

char bio_char(Bio b) {
  switch (b) {
    case Bio::B: return 'B';
    case Bio::I: return 'I';
    case Bio::O: return 'O';
  }
  return '?';
}

namespace {

// Longest n such that segment[s, s+n) is a sub-run of phrase.
std::size_t longest_overlap_at(const TokenSeq& segment, std::size_t s, const TokenSeq& phrase) {
  std::size_t best = 0;
  for (std::size_t p = 0; p < phrase.size(); ++p) {
    std::size_t n = 0;
    while (s + n < segment.size() && p + n < phrase.size() && segment[s + n] == phrase[p + n]) ++n;
    best = std::max(best, n);
  }
  return best;
}

}  // namespace

std::vector<KeywordSpan> derive_keywords(const TokenSeq& segment, const KeyphraseSet& keyphrases) {
  auto phrases = keyphrases.all();
  std::vector<std::size_t> len(segment.size(), 0);
  for (std::size_t s = 0; s < segment.size(); ++s)
    for (const auto& ph : phrases) len[s] = std::max(len[s], longest_overlap_at(segment, s, ph));

  std::vector<KeywordSpan> out;
  std::set<TokenSeq> seen;
  for (std::size_t s = 0; s < segment.size(); ++s) {
    if (len[s] == 0) continue;
    // Covered by the run starting one token earlier: not maximal.
    if (s > 0 && len[s - 1] >= len[s] + 1) continue;
    TokenSeq run(segment.begin() + static_cast<std::ptrdiff_t>(s),
                 segment.begin() + static_cast<std::ptrdiff_t>(s + len[s]));
    if (seen.insert(run).second) out.push_back({std::move(run), s, 1.0});
  }
  return out;
}

BioSequence bio_labels(const TokenSeq& segment, const std::vector<KeywordSpan>& spans) {
  struct Occ {
    std::size_t start, length;
  };
  std::vector<Occ> occs;
  for (const auto& sp : spans) {
    if (sp.tokens.empty() || sp.start + sp.tokens.size() > segment.size() ||
        !std::equal(sp.tokens.begin(), sp.tokens.end(), segment.begin() + static_cast<std::ptrdiff_t>(sp.start)))
      throw Error("keyword span '" + join(sp.tokens) + "' does not occur at index " + std::to_string(sp.start));
    std::size_t from = 0;
    while (auto pos = find_run(segment, sp.tokens, from)) {
      occs.push_back({*pos, sp.tokens.size()});
      from = *pos + 1;
    }
  }
  std::sort(occs.begin(), occs.end(), [](const Occ& a, const Occ& b) {
    return a.length != b.length ? a.length > b.length : a.start < b.start;
  });
  BioSequence labels(segment.size(), Bio::O);
  std::vector<bool> taken(segment.size(), false);
  for (const auto& o : occs) {
    bool free = true;
    for (std::size_t i = o.start; i < o.start + o.length; ++i) free = free && !taken[i];
    if (!free) continue;
    for (std::size_t i = o.start; i < o.start + o.length; ++i) {
      taken[i] = true;
      labels[i] = i == o.start ? Bio::B : Bio::I;
    }
  }
  return labels;
}

std::vector<KeywordSpan> recover_spans(const TokenSeq& segment, const BioSequence& labels) {
  if (labels.size() != segment.size()) throw Error("label sequence length differs from segment");
  std::vector<KeywordSpan> out;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != Bio::B) continue;
    std::size_t j = i + 1;
    while (j < labels.size() && labels[j] == Bio::I) ++j;
    out.push_back({TokenSeq(segment.begin() + static_cast<std::ptrdiff_t>(i),
                            segment.begin() + static_cast<std::ptrdiff_t>(j)),
                   i, 1.0});
    i = j - 1;
  }
  return out;
}

}  // namespace kappa
