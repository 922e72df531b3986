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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kappa/document.hpp"
#include "kappa/metrics.hpp"
#include "kappa/model.hpp"
#include "kappa/vocabulary.hpp"

namespace kappa {

inline constexpr std::string_view kPromptHead = "keyphrases from higher-level: ";
inline constexpr std::string_view kPromptTail = " [sep] find keyphrases from: ";

// Encoder input [X^p; X] for one level.
struct PromptedInput {
  std::vector<TokenSeq> previous;  // K_{l-1}, in prompt order
  TokenSeq prompt_tokens;
  TokenSeq body_tokens;            // after truncation
  std::string separator{kSepToken};
  std::string rendered;            // template text, body untruncated

  TokenSeq tokens() const;
};

std::string render_prompt(const std::vector<TokenSeq>& previous, const TokenSeq& body);
// Truncates the body tail when prompt + body exceed max_len.
PromptedInput make_prompted_input(const std::vector<TokenSeq>& previous, const TokenSeq& body, std::size_t max_len);

// Template tokens, so vocabularies can include them.
TokenSeq prompt_template_tokens();

// Greedy decode of all N slots to EOS or m steps.
std::vector<SlotOutput> generate_slots(const Model& model, const Vocabulary& vocab, const Tensor& h_enc,
                                       const SlotKeywords& keywords);
std::vector<SlotOutput> generate_slots(const Model& model, const Vocabulary& vocab, const PromptedInput& input,
                                       const SlotKeywords& keywords);

enum class SlotGroup { kPresent, kAbsent };
std::string_view group_name(SlotGroup g);

struct PortraitEntry {
  TokenSeq tokens;
  int level = 1;
  SlotGroup group = SlotGroup::kPresent;
  double confidence = 0.0;
};

// Drops null and empty outputs and anything token-identical to a padding
// keyword, then keeps the most confident entry per stemmed form.
std::vector<PortraitEntry> filter_predictions(const std::vector<SlotOutput>& raw,
                                              const std::vector<TokenSeq>& padding_keywords, int level);

struct LevelRecord {
  int level = 1;
  PromptedInput input;
  std::vector<KeywordSpan> keywords;        // predicted W^K_l
  std::vector<TokenSeq> padding_keywords;   // W^K_P used for filtering
  std::vector<SlotOutput> raw;
  std::vector<PortraitEntry> kept;          // K_l
};

struct Portrait {
  std::string doc_id;
  std::vector<PortraitEntry> entries;  // earliest level wins on stem clashes
  std::vector<LevelRecord> levels;
};

// Keyword and prompt context for one segment.
struct LevelKeywords {
  std::vector<KeywordSpan> predicted;  // all predicted spans, ranked
  SlotKeywords slots;                  // KCC assignment of the top N_K
};
LevelKeywords extract_keywords(const Model& model, const Vocabulary& vocab, const TokenSeq& body);

// W^K_P at inference time. With ground truth, predicted and derived keywords
// minus the present keyphrases; without ground truth, empty.
std::vector<TokenSeq> inference_padding_keywords(const MultiLevelDocument& doc, const TokenSeq& segment,
                                                 const std::vector<KeywordSpan>& predicted);

Portrait phd_portrait(const Model& model, const Vocabulary& vocab, const MultiLevelDocument& doc);
// Every segment independently, prompted with its own predicted keywords.
Portrait generate_per_segment(const Model& model, const Vocabulary& vocab, const MultiLevelDocument& doc);

std::string portrait_to_json_line(const Portrait& portrait);
Portrait portrait_from_json_line(const std::string& line, std::size_t line_number);
void save_portraits(const std::filesystem::path& path, const std::vector<Portrait>& portraits);
std::vector<Portrait> load_portraits(const std::filesystem::path& path);

}  // namespace kappa
