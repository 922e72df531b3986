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

#include "kappa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "kappa/document.hpp"
#include "kappa/error.hpp"
#include "kappa/porter.hpp"

namespace kappa {

TokenSeq stem_sequence(const TokenSeq& tokens) {
  TokenSeq out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(porter_stem(t));
  return out;
}

std::string stem_key(const TokenSeq& tokens) { return join(stem_sequence(tokens)); }

namespace {

// Stemmed keys in order, first occurrence kept.
std::vector<std::string> unique_keys(const std::vector<TokenSeq>& phrases) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& p : phrases) {
    auto k = stem_key(p);
    if (seen.insert(k).second) out.push_back(std::move(k));
  }
  return out;
}

std::vector<bool> relevance(const std::vector<std::string>& preds, const std::vector<std::string>& targets) {
  std::set<std::string> t(targets.begin(), targets.end());
  std::vector<bool> rel;
  for (const auto& p : preds) rel.push_back(t.count(p) > 0);
  return rel;
}

Prf prf(std::size_t matches, std::size_t n_pred, std::size_t n_target) {
  Prf r;
  if (n_pred) r.precision = static_cast<double>(matches) / static_cast<double>(n_pred);
  if (n_target) r.recall = static_cast<double>(matches) / static_cast<double>(n_target);
  if (r.precision + r.recall > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

}  // namespace

Prf f1_at_m(const std::vector<TokenSeq>& predictions, const std::vector<TokenSeq>& targets) {
  auto p = unique_keys(predictions), t = unique_keys(targets);
  auto rel = relevance(p, t);
  return prf(static_cast<std::size_t>(std::count(rel.begin(), rel.end(), true)), p.size(), t.size());
}

Prf f1_at_5(const std::vector<TokenSeq>& ranked, const std::vector<TokenSeq>& targets) {
  auto p = unique_keys(ranked), t = unique_keys(targets);
  if (p.size() > 5) p.resize(5);
  auto rel = relevance(p, t);
  // Padding entries never match, so they only enlarge the denominator.
  return prf(static_cast<std::size_t>(std::count(rel.begin(), rel.end(), true)), 5, t.size());
}

double map_at_k(const std::vector<TokenSeq>& ranked, const std::vector<TokenSeq>& targets, int k) {
  if (k <= 0) throw Error("map_at_k: K must be positive");
  auto p = unique_keys(ranked), t = unique_keys(targets);
  if (t.empty()) return 0.0;
  auto rel = relevance(p, t);
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < rel.size() && r < static_cast<std::size_t>(k); ++r) {
    if (!rel[r]) continue;
    ++hits;
    sum += static_cast<double>(hits) / static_cast<double>(r + 1);
  }
  return sum / static_cast<double>(std::min<std::size_t>(t.size(), static_cast<std::size_t>(k)));
}

double ndcg_at_k(const std::vector<TokenSeq>& ranked, const std::vector<TokenSeq>& targets, int k) {
  if (k <= 0) throw Error("ndcg_at_k: K must be positive");
  auto p = unique_keys(ranked), t = unique_keys(targets);
  if (t.empty()) return 0.0;
  auto rel = relevance(p, t);
  double dcg = 0.0, ideal = 0.0;
  for (std::size_t r = 0; r < rel.size() && r < static_cast<std::size_t>(k); ++r)
    if (rel[r]) dcg += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  std::size_t n_ideal = std::min<std::size_t>(t.size(), static_cast<std::size_t>(k));
  for (std::size_t r = 0; r < n_ideal; ++r) ideal += 1.0 / std::log2(static_cast<double>(r) + 2.0);
  return dcg / ideal;
}

double duplication_ratio(const std::vector<SlotOutput>& raw) {
  std::set<std::string> distinct;
  std::size_t non_null = 0;
  for (const auto& s : raw) {
    if (s.is_null) continue;
    ++non_null;
    distinct.insert(stem_key(s.tokens));
  }
  if (non_null == 0) return 0.0;
  return 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(non_null);
}

double null_ratio(const std::vector<SlotOutput>& raw) {
  if (raw.empty()) return 0.0;
  auto n = std::count_if(raw.begin(), raw.end(), [](const SlotOutput& s) { return s.is_null; });
  return static_cast<double>(n) / static_cast<double>(raw.size());
}

bool is_present_in(const TokenSeq& phrase, const TokenSeq& source) {
  return contains_run(stem_sequence(source), stem_sequence(phrase));
}

namespace {

SplitScores score_split(const std::vector<TokenSeq>& preds, const std::vector<TokenSeq>& targets) {
  SplitScores s;
  s.has_targets = !targets.empty();
  s.f1_5 = f1_at_5(preds, targets).f1;
  s.f1_m = f1_at_m(preds, targets).f1;
  int m = std::max(1, static_cast<int>(unique_keys(preds).size()));
  s.map_5 = map_at_k(preds, targets, 5);
  s.map_m = map_at_k(preds, targets, m);
  s.ndcg_5 = ndcg_at_k(preds, targets, 5);
  s.ndcg_m = ndcg_at_k(preds, targets, m);
  return s;
}

}  // namespace

EvalRecord evaluate_document(const std::string& doc_id, const std::vector<TokenSeq>& ranked_predictions,
                             const std::vector<TokenSeq>& present_targets,
                             const std::vector<TokenSeq>& absent_targets, const TokenSeq& source,
                             const std::vector<std::vector<SlotOutput>>& raw_sets, std::size_t token_count) {
  EvalRecord r;
  r.doc_id = doc_id;
  r.predictions = ranked_predictions;
  r.present_targets = present_targets;
  r.absent_targets = absent_targets;
  TokenSeq stemmed_source = stem_sequence(source);
  std::vector<TokenSeq> pres, abs;
  for (const auto& p : ranked_predictions)
    (contains_run(stemmed_source, stem_sequence(p)) ? pres : abs).push_back(p);
  r.present = score_split(pres, present_targets);
  r.absent = score_split(abs, absent_targets);
  for (const auto& raw : raw_sets) {
    r.duplication += duplication_ratio(raw);
    r.null_ratio += null_ratio(raw);
  }
  if (!raw_sets.empty()) {
    r.duplication /= static_cast<double>(raw_sets.size());
    r.null_ratio /= static_cast<double>(raw_sets.size());
  }
  r.tokens = static_cast<double>(token_count);
  return r;
}

EvalSummary summarize(const std::vector<EvalRecord>& records) {
  EvalSummary s;
  s.documents = records.size();
  std::size_t np = 0, na = 0;
  auto acc = [](SplitScores& into, const SplitScores& x) {
    into.f1_5 += x.f1_5;
    into.f1_m += x.f1_m;
    into.map_5 += x.map_5;
    into.map_m += x.map_m;
    into.ndcg_5 += x.ndcg_5;
    into.ndcg_m += x.ndcg_m;
  };
  auto div = [](SplitScores& x, std::size_t n) {
    x.has_targets = n > 0;
    if (!n) return;
    double d = static_cast<double>(n);
    x.f1_5 /= d;
    x.f1_m /= d;
    x.map_5 /= d;
    x.map_m /= d;
    x.ndcg_5 /= d;
    x.ndcg_m /= d;
  };
  for (const auto& r : records) {
    if (r.present.has_targets) acc(s.present, r.present), ++np;
    if (r.absent.has_targets) acc(s.absent, r.absent), ++na;
    s.duplication += r.duplication;
    s.null_ratio += r.null_ratio;
    s.tokens += r.tokens;
  }
  div(s.present, np);
  div(s.absent, na);
  if (!records.empty()) {
    double d = static_cast<double>(records.size());
    s.duplication /= d;
    s.null_ratio /= d;
    s.tokens /= d;
  }
  return s;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

void split_cells(std::ostringstream& os, const SplitScores& s) {
  os << ',' << fmt(s.f1_5) << ',' << fmt(s.f1_m) << ',' << fmt(s.map_5) << ',' << fmt(s.map_m) << ','
     << fmt(s.ndcg_5) << ',' << fmt(s.ndcg_m);
}

}  // namespace

std::string eval_csv(const std::vector<EvalRecord>& records) {
  std::ostringstream os;
  os << "doc_id,present_f1_5,present_f1_m,present_map_5,present_map_m,present_ndcg_5,present_ndcg_m,"
        "absent_f1_5,absent_f1_m,absent_map_5,absent_map_m,absent_ndcg_5,absent_ndcg_m,"
        "duplication,null_ratio,tokens\n";
  for (const auto& r : records) {
    os << r.doc_id;
    split_cells(os, r.present);
    split_cells(os, r.absent);
    os << ',' << fmt(r.duplication) << ',' << fmt(r.null_ratio) << ',' << fmt(r.tokens) << '\n';
  }
  auto s = summarize(records);
  os << "MACRO";
  split_cells(os, s.present);
  split_cells(os, s.absent);
  os << ',' << fmt(s.duplication) << ',' << fmt(s.null_ratio) << ',' << fmt(s.tokens) << '\n';
  return os.str();
}

void write_eval_csv(const std::filesystem::path& path, const std::vector<EvalRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write report: " + path.string());
  out << eval_csv(records);
}

}  // namespace kappa
