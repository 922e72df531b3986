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

#include "kappa/synth.hpp"

#include <algorithm>
#include <random>

#include "kappa/error.hpp"

namespace kappa {

namespace {

const std::vector<std::string> kHeads = {"system", "device", "method", "apparatus", "assembly", "unit"};
const std::vector<std::string> kLabels = {"electrical", "mechanical", "chemical", "computing"};

const std::vector<std::string> kFiller = {
    "the",      "a",         "of",        "and",      "wherein",  "comprising", "said",    "configured",
    "to",       "is",        "for",       "with",     "first",    "second",     "layer",   "portion",
    "plurality", "coupled",  "each",      "which",    "having",   "at",         "least",   "one",
    "in",       "on",        "by",        "from",     "further",  "housing",    "surface", "member",
    "connected", "providing", "receiving", "output",  "input",    "control",    "based",   "frame",
    "support",  "region",    "element",   "position", "mounted",  "disposed",   "adjacent", "body"};

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

void append_filler(std::mt19937_64& rng, std::vector<std::string>& words, std::size_t lo, std::size_t hi) {
  std::size_t n = lo + pick(rng, hi - lo + 1);
  for (std::size_t i = 0; i < n; ++i) {
    // Heads are mixed in so they surface as padding keywords.
    if (pick(rng, 6) == 0)
      words.push_back(kHeads[pick(rng, kHeads.size())]);
    else
      words.push_back(kFiller[pick(rng, kFiller.size())]);
  }
}

std::string sentence(const std::vector<std::string>& words) {
  std::string s;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) s += ' ';
    s += words[i];
  }
  return s + ".";
}

}  // namespace

const std::vector<SynthLexiconEntry>& synth_lexicon() {
  static const std::vector<SynthLexiconEntry> lexicon = [] {
    const std::vector<std::string> phrases = {
        "graph neural network", "signal encoder",   "battery cell",     "optical lens",    "gear train",
        "heat exchanger",       "image sensor",     "voltage regulator", "query index",     "robot arm",
        "fuel injector",        "wireless antenna", "memory buffer",    "hydraulic pump",  "laser diode",
        "speech decoder",       "carbon fiber",     "polymer coating",  "cache controller", "motor shaft",
        "solar panel",          "touch screen",     "valve",            "catalyst"};
    // Two topic phrases per label; none of their words occur in documents.
    const std::vector<std::vector<std::string>> topics = {{"power electronics", "circuit design"},
                                                          {"machine dynamics", "fluid mechanics"},
                                                          {"materials chemistry", "reaction engineering"},
                                                          {"data processing", "information retrieval"}};
    std::vector<SynthLexiconEntry> out;
    for (std::size_t i = 0; i < phrases.size(); ++i) {
      std::size_t label = i % kLabels.size();
      out.push_back({phrases[i], topics[label][(i / kLabels.size()) % 2], kLabels[label]});
    }
    return out;
  }();
  return lexicon;
}

std::vector<DocumentRecord> synth_records(std::uint64_t seed, std::size_t n_docs, const SynthProfile& profile) {
  if (n_docs == 0) throw Error("synthetic corpus needs at least one document");
  if (profile.min_present < 1 || profile.max_present < profile.min_present || profile.max_present > 6 ||
      !(profile.off_topic >= 0.0 && profile.off_topic <= 1.0))
    throw Error("invalid synthetic profile");
  const auto& lex = synth_lexicon();
  std::mt19937_64 rng(seed);
  std::vector<DocumentRecord> out;
  for (std::size_t d = 0; d < n_docs; ++d) {
    std::vector<std::size_t> order(lex.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t n_present = profile.min_present + pick(rng, profile.max_present - profile.min_present + 1);
    std::size_t n_title = 1 + pick(rng, 2);
    // Title phrases carry the document's label; the others are off-topic
    // with probability profile.off_topic.
    for (std::size_t j = 1; j < n_present; ++j) {
      bool on_topic = j < n_title || !std::bernoulli_distribution(profile.off_topic)(rng);
      if (!on_topic || lex[order[j]].label == lex[order[0]].label) continue;
      for (std::size_t k = j + 1; k < order.size(); ++k)
        if (lex[order[k]].label == lex[order[0]].label) {
          std::swap(order[j], order[k]);
          break;
        }
    }
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_present));

    DocumentRecord r;
    r.id = "doc-" + std::to_string(d);
    for (std::size_t i = 0; i < n_title; ++i) {
      if (i) r.title += " and ";
      r.title += lex[chosen[i]].phrase;
    }
    r.title += " " + kHeads[pick(rng, kHeads.size())];

    std::vector<std::size_t> abstract_order = chosen;
    std::shuffle(abstract_order.begin(), abstract_order.end(), rng);
    for (std::size_t idx : abstract_order) {
      std::vector<std::string> words;
      append_filler(rng, words, 2, 4);
      words.push_back(lex[idx].phrase);
      append_filler(rng, words, 2, 4);
      if (!r.abstract.empty()) r.abstract += ' ';
      r.abstract += sentence(words);
    }

    // Claims stay within 64 tokens and sentences within 16, so greedy packing
    // at 48 tokens yields one or two segments.
    std::size_t claim_tokens = 0;
    std::size_t n_claims = 2 + pick(rng, 4);
    for (std::size_t c = 0; c < n_claims; ++c) {
      std::vector<std::string> words;
      if (c == 0) {
        words = {"a", kHeads[pick(rng, kHeads.size())], "comprising"};
      } else {
        words = {"the", kHeads[pick(rng, kHeads.size())], "according", "to", "claim"};
        words.push_back(std::to_string(1 + pick(rng, c)));
      }
      if (c == 0 || pick(rng, 2) == 0) words.push_back(lex[chosen[pick(rng, chosen.size())]].phrase);
      append_filler(rng, words, 2, 4);
      std::size_t len = tokenize(sentence(words)).size();
      if (claim_tokens + len > 64) break;
      claim_tokens += len;
      if (!r.claims.empty()) r.claims += ' ';
      r.claims += sentence(words);
    }

    for (std::size_t idx : chosen) r.present_keyphrases.push_back(lex[idx].phrase);
    for (std::size_t i = 0; i < n_title; ++i) {
      const auto& a = lex[chosen[i]].absent_phrase;
      if (std::find(r.absent_keyphrases.begin(), r.absent_keyphrases.end(), a) == r.absent_keyphrases.end())
        r.absent_keyphrases.push_back(a);
    }
    r.label = lex[chosen[0]].label;
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<MultiLevelDocument> synth_corpus(std::uint64_t seed, std::size_t n_docs, const SynthProfile& profile) {
  std::vector<MultiLevelDocument> docs;
  for (const auto& r : synth_records(seed, n_docs, profile)) docs.push_back(make_document(r, profile.max_segment_tokens));
  return docs;
}

}  // namespace kappa
