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

#include <map>
#include <string>
#include <vector>

#include "kappa/inference.hpp"

namespace kappa {

enum class AnalysisMode { kPure, kAugmented, kOriginal };

AnalysisMode parse_mode(const std::string& name);
std::string_view mode_name(AnalysisMode mode);
// "1", "1,2", "1,2,3" -> level list.
std::vector<int> parse_levels(const std::string& text);
std::string levels_name(const std::vector<int>& levels);

inline constexpr std::string_view kPortraitSeparator = ";";

struct AnalysisInput {
  AnalysisMode mode = AnalysisMode::kOriginal;
  TokenSeq tokens;
  std::size_t token_count = 0;
};

// original: body tokens of the requested levels. pure: portrait entries from
// those levels joined by ";". augmented: original, ";", then the pure tokens.
AnalysisInput build_input(const MultiLevelDocument& doc, const Portrait& portrait, AnalysisMode mode,
                          const std::vector<int>& levels);

// Multinomial bag-of-tokens classifier with add-one smoothing. Tokens unseen
// in training are ignored; exact score ties go to the smaller label.
class NaiveBayes {
 public:
  void train(const std::vector<TokenSeq>& inputs, const std::vector<std::string>& labels);
  std::string classify(const TokenSeq& input) const;
  std::map<std::string, double> log_posterior(const TokenSeq& input) const;

 private:
  std::map<std::string, std::size_t> doc_count_;
  std::map<std::string, std::map<std::string, std::size_t>> token_count_;
  std::map<std::string, std::size_t> total_tokens_;
  std::map<std::string, bool> vocab_;
  std::size_t n_docs_ = 0;
};

double accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& gold);
// Share of the most frequent label (ties to the smaller label).
double majority_baseline(const std::vector<std::string>& train_labels, const std::vector<std::string>& gold);

struct ModeResult {
  AnalysisMode mode = AnalysisMode::kOriginal;
  std::vector<int> levels;
  double accuracy = 0.0;
  double mean_tokens = 0.0;
  std::size_t documents = 0;
};

std::string report_csv(const std::vector<ModeResult>& results);
std::string report_table(const std::vector<ModeResult>& results);

}  // namespace kappa
