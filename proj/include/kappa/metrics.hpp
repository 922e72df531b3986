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
#include <string>
#include <vector>

#include "kappa/text.hpp"

namespace kappa {

// One slot's raw output before filtering.
struct SlotOutput {
  TokenSeq tokens;
  bool is_null = false;
  double confidence = 0.0;
};

TokenSeq stem_sequence(const TokenSeq& tokens);
// Space-joined stems; equality of keys is stemmed sequence equality.
std::string stem_key(const TokenSeq& tokens);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

Prf f1_at_m(const std::vector<TokenSeq>& predictions, const std::vector<TokenSeq>& targets);
// Top five predictions; fewer than five are padded with guaranteed misses.
Prf f1_at_5(const std::vector<TokenSeq>& ranked, const std::vector<TokenSeq>& targets);
double map_at_k(const std::vector<TokenSeq>& ranked, const std::vector<TokenSeq>& targets, int k);
double ndcg_at_k(const std::vector<TokenSeq>& ranked, const std::vector<TokenSeq>& targets, int k);

double duplication_ratio(const std::vector<SlotOutput>& raw);
double null_ratio(const std::vector<SlotOutput>& raw);

// True when the stemmed phrase occurs contiguously in the stemmed source.
bool is_present_in(const TokenSeq& phrase, const TokenSeq& source);

struct SplitScores {
  double f1_5 = 0.0, f1_m = 0.0, map_5 = 0.0, map_m = 0.0, ndcg_5 = 0.0, ndcg_m = 0.0;
  bool has_targets = false;
};

struct EvalRecord {
  std::string doc_id;
  std::vector<TokenSeq> predictions;  // confidence order
  std::vector<TokenSeq> present_targets;
  std::vector<TokenSeq> absent_targets;
  SplitScores present, absent;
  double duplication = 0.0;
  double null_ratio = 0.0;
  double tokens = 0.0;
};

// Splits predictions by presence in source and scores each split against the
// matching targets. @M uses the number of predictions in the split as cutoff.
// raw_sets holds one slot set per decoder call (one per portrait level);
// duplication and null ratio are averaged over the sets, so a phrase repeated
// across levels is not a duplicate.
EvalRecord evaluate_document(const std::string& doc_id, const std::vector<TokenSeq>& ranked_predictions,
                             const std::vector<TokenSeq>& present_targets,
                             const std::vector<TokenSeq>& absent_targets, const TokenSeq& source,
                             const std::vector<std::vector<SlotOutput>>& raw_sets, std::size_t token_count);

struct EvalSummary {
  SplitScores present, absent;  // macro averages over documents with targets of that kind
  double duplication = 0.0, null_ratio = 0.0, tokens = 0.0;
  std::size_t documents = 0;
};

EvalSummary summarize(const std::vector<EvalRecord>& records);
void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records);
std::string eval_csv(const std::vector<EvalRecord>& records);

}  // namespace kappa
