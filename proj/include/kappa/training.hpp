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

#include <array>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "kappa/assignment.hpp"
#include "kappa/document.hpp"
#include "kappa/inference.hpp"
#include "kappa/model.hpp"
#include "kappa/vocabulary.hpp"

namespace kappa {

struct TsmtConfig {
  std::size_t E = 60;
  std::size_t E1 = 10;
  std::size_t E2 = 2;
  double lambda_null = 0.2;
  double lambda_w = 0.7;
  double lambda_g = 1.0;
  double alpha_w = 3e-4;
  double alpha_g = 3e-4;
  std::size_t batch = 8;
  std::uint64_t seed = 1;
  bool use_kwp = true;

  void validate() const;
};

struct LossReport {
  std::size_t epoch = 0;
  std::string stage;  // "1" or "2+3"
  double l1_w = 0.0;
  double l_g = std::numeric_limits<double>::quiet_NaN();
  double l2_w = std::numeric_limits<double>::quiet_NaN();
  double null_ratio = std::numeric_limits<double>::quiet_NaN();
  double duplication = std::numeric_limits<double>::quiet_NaN();
};

std::string loss_report_csv(const std::vector<LossReport>& reports);

// ---- KWP ------------------------------------------------------------------------------

// W^K_P: keywords that equal none of the excluded phrases, deduplicated,
// ranked by confidence (ties to the earlier start).
std::vector<KeywordSpan> padding_keywords(const std::vector<KeywordSpan>& keywords,
                                          const std::vector<TokenSeq>& excluded);
// Excludes every present keyphrase.
std::vector<KeywordSpan> padding_keywords(const KeyphraseSet& keyphrases, const std::vector<KeywordSpan>& keywords);

TargetList kwp_build_targets(const KeyphraseSet& keyphrases, const std::vector<KeywordSpan>& keywords,
                             std::size_t N, const std::vector<TokenSeq>& excluded, bool use_kwp = true);
// Excluded set = all present keyphrases.
TargetList kwp_build_targets(const KeyphraseSet& keyphrases, const std::vector<KeywordSpan>& keywords,
                             std::size_t N, bool use_kwp = true);

// ---- losses ---------------------------------------------------------------------------

// 1 / count of each BIO class over the given sequences, counts floored at 1.
std::array<double, 3> kwe_class_weights(const std::vector<BioSequence>& batch);
// sum_s xi[y_s] * -log p[s][y_s], divided by normalizer.
Var loss_kwe(Var p_w, const BioSequence& targets, const std::array<double, 3>& xi, double normalizer);
// Single-sequence form: weights from this sequence, normalizer S.
Var loss_kwe(Var p_w, const BioSequence& targets);

struct KgWeights {
  double lambda_null = 0.2;
  double lambda_w = 0.7;
};
double target_weight(const TargetEntry& entry, const KgWeights& w);

// Teacher-forced slot loss. assigned[n] is slot n's target; every target is
// terminated by EOS.
Var loss_kg(Tape& tape, const Model& model, const Vocabulary& vocab, Var h_enc, const SlotKeywords& keywords,
            const std::vector<TargetEntry>& assigned, const KgWeights& weights);

double loss_encoder_stage3(double l1_w, const std::vector<double>& inner_losses, double lambda_g);

// Slot-ordered targets from an assignment.
std::vector<TargetEntry> assigned_targets(const TargetList& targets, const SlotAssignment& assignment);

// ---- examples and schedule -----------------------------------------------------------------

// One training example is one document segment.
struct TrainExample {
  std::size_t doc = 0;
  int level = 1;
  TokenSeq body;
  std::vector<int> body_ids;
  BioSequence bio;
  std::vector<KeywordSpan> keywords;  // ground-truth W^K of the segment
  KeyphraseSet targets;               // present: those in this segment; absent: all of the document's
  PromptedInput input;                // prompted with ground-truth context
  std::vector<int> input_ids;
};

std::vector<TrainExample> build_examples(const std::vector<MultiLevelDocument>& docs, const Vocabulary& vocab,
                                         const ModelConfig& config);

// Vocabulary over all segment, keyphrase and prompt-template tokens.
Vocabulary build_vocabulary(const std::vector<MultiLevelDocument>& docs);

struct TrainHooks {
  std::function<void(const LossReport&)> on_epoch;
  // Documents whose level-1 slots are decoded after every epoch for the
  // null-ratio and duplication probes.
  std::vector<const MultiLevelDocument*> probe;
  // Called before and after each stage-1 batch, inner epoch and stage-3
  // update; the argument names the phase.
  std::function<void(const std::string&, bool before)> on_phase;
};

std::vector<LossReport> tsmt_train(Model& model, const Vocabulary& vocab, const std::vector<MultiLevelDocument>& docs,
                                   const TsmtConfig& config, const TrainHooks& hooks = {});

// ---- config files ---------------------------------------------------------------------

// "key = value" lines; '#' starts a comment.
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> parse_config_file(const std::filesystem::path& path);

}  // namespace kappa
