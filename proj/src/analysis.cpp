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

#include "kappa/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "kappa/error.hpp"

namespace kappa {

AnalysisMode parse_mode(const std::string& name) {
  if (name == "pure") return AnalysisMode::kPure;
  if (name == "augmented") return AnalysisMode::kAugmented;
  if (name == "original") return AnalysisMode::kOriginal;
  throw Error("unknown analysis mode `" + name + "` (expected pure, augmented or original)");
}

std::string_view mode_name(AnalysisMode mode) {
  switch (mode) {
    case AnalysisMode::kPure: return "pure";
    case AnalysisMode::kAugmented: return "augmented";
    case AnalysisMode::kOriginal: return "original";
  }
  return "?";
}

std::vector<int> parse_levels(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(part, &used);
      if (used != part.size() || v < 1) throw Error("");
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error("invalid level list `" + text + "`");
    }
  }
  if (out.empty()) throw Error("empty level list");
  return out;
}

std::string levels_name(const std::vector<int>& levels) {
  std::string s;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(levels[i]);
  }
  return s;
}

AnalysisInput build_input(const MultiLevelDocument& doc, const Portrait& portrait, AnalysisMode mode,
                          const std::vector<int>& levels) {
  std::set<int> want(levels.begin(), levels.end());
  TokenSeq original;
  for (const auto& s : doc.segments)
    if (want.count(s.level_index)) original.insert(original.end(), s.tokens.begin(), s.tokens.end());
  TokenSeq pure;
  for (const auto& e : portrait.entries) {
    if (!want.count(e.level)) continue;
    if (!pure.empty()) pure.emplace_back(kPortraitSeparator);
    pure.insert(pure.end(), e.tokens.begin(), e.tokens.end());
  }
  AnalysisInput in;
  in.mode = mode;
  switch (mode) {
    case AnalysisMode::kOriginal:
      in.tokens = std::move(original);
      break;
    case AnalysisMode::kPure:
      in.tokens = std::move(pure);
      break;
    case AnalysisMode::kAugmented:
      in.tokens = std::move(original);
      in.tokens.emplace_back(kPortraitSeparator);
      in.tokens.insert(in.tokens.end(), pure.begin(), pure.end());
      break;
  }
  in.token_count = in.tokens.size();
  return in;
}

void NaiveBayes::train(const std::vector<TokenSeq>& inputs, const std::vector<std::string>& labels) {
  if (inputs.empty()) throw Error("classifier: empty training set");
  if (inputs.size() != labels.size()) throw Error("classifier: inputs and labels differ in length");
  *this = NaiveBayes{};
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const auto& y = labels[i];
    ++doc_count_[y];
    auto& counts = token_count_[y];
    for (const auto& t : inputs[i]) {
      ++counts[t];
      ++total_tokens_[y];
      vocab_[t] = true;
    }
  }
  n_docs_ = inputs.size();
}

std::map<std::string, double> NaiveBayes::log_posterior(const TokenSeq& input) const {
  if (n_docs_ == 0) throw Error("classifier: not trained");
  const double V = static_cast<double>(vocab_.size());
  std::map<std::string, double> out;
  for (const auto& [label, n] : doc_count_) {
    double s = std::log(static_cast<double>(n) / static_cast<double>(n_docs_));
    auto tot_it = total_tokens_.find(label);
    double total = tot_it == total_tokens_.end() ? 0.0 : static_cast<double>(tot_it->second);
    const auto& counts = token_count_.at(label);
    for (const auto& t : input) {
      if (!vocab_.count(t)) continue;
      auto it = counts.find(t);
      double c = it == counts.end() ? 0.0 : static_cast<double>(it->second);
      s += std::log((c + 1.0) / (total + V));
    }
    out[label] = s;
  }
  return out;
}

std::string NaiveBayes::classify(const TokenSeq& input) const {
  auto post = log_posterior(input);
  // std::map iterates labels in lexicographic order; strict > keeps the first.
  auto best = post.begin();
  for (auto it = post.begin(); it != post.end(); ++it)
    if (it->second > best->second) best = it;
  return best->first;
}

double accuracy(const std::vector<std::string>& predicted, const std::vector<std::string>& gold) {
  if (predicted.size() != gold.size()) throw Error("accuracy: length mismatch");
  if (gold.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) hit += predicted[i] == gold[i];
  return static_cast<double>(hit) / static_cast<double>(gold.size());
}

double majority_baseline(const std::vector<std::string>& train_labels, const std::vector<std::string>& gold) {
  if (train_labels.empty()) throw Error("majority_baseline: empty training labels");
  std::map<std::string, std::size_t> counts;
  for (const auto& l : train_labels) ++counts[l];
  auto best = counts.begin();
  for (auto it = counts.begin(); it != counts.end(); ++it)
    if (it->second > best->second) best = it;
  return accuracy(std::vector<std::string>(gold.size(), best->first), gold);
}

std::string report_csv(const std::vector<ModeResult>& results) {
  std::ostringstream os;
  os << "mode,levels,accuracy,mean_tokens,documents\n";
  char buf[64];
  for (const auto& r : results) {
    std::snprintf(buf, sizeof buf, "%.4f,%.2f", r.accuracy, r.mean_tokens);
    os << mode_name(r.mode) << ",\"" << levels_name(r.levels) << "\"," << buf << ',' << r.documents << '\n';
  }
  return os.str();
}

std::string report_table(const std::vector<ModeResult>& results) {
  std::vector<std::array<std::string, 4>> rows{{"mode", "levels", "Acc.", "#Tks"}};
  char buf[32];
  for (const auto& r : results) {
    std::array<std::string, 4> row;
    row[0] = std::string(mode_name(r.mode));
    row[1] = levels_name(r.levels);
    std::snprintf(buf, sizeof buf, "%.4f", r.accuracy);
    row[2] = buf;
    std::snprintf(buf, sizeof buf, "%.2f", r.mean_tokens);
    row[3] = buf;
    rows.push_back(row);
  }
  std::array<std::size_t, 4> width{};
  for (const auto& row : rows)
    for (std::size_t c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
  std::ostringstream os;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < 4; ++c) {
      if (c) os << "  ";
      // Text columns left-aligned, numbers right-aligned.
      if (c < 2)
        os << row[c] << std::string(width[c] - row[c].size(), ' ');
      else
        os << std::string(width[c] - row[c].size(), ' ') << row[c];
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace kappa
