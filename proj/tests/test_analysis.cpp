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

#include <gtest/gtest.h>

#include <cmath>

#include "kappa/analysis.hpp"
#include "kappa/error.hpp"

using namespace kappa;

namespace {

MultiLevelDocument two_level_doc() {
  MultiLevelDocument d;
  d.doc_id = "d";
  d.segments = {{{"graph", "model"}, 1}, {{"node", "edge"}, 2}, {{"claim", "text"}, 3}};
  return d;
}

Portrait portrait_of(std::vector<std::pair<TokenSeq, int>> entries) {
  Portrait p;
  for (auto& [t, l] : entries) p.entries.push_back({t, l, SlotGroup::kAbsent, 0.5});
  return p;
}

}  // namespace

TEST(BuildInput, Modes) {
  auto doc = two_level_doc();
  auto p = portrait_of({{{"retrieval"}, 1}, {{"data", "mining"}, 2}});
  auto orig = build_input(doc, p, AnalysisMode::kOriginal, {1});
  EXPECT_EQ(orig.tokens, (TokenSeq{"graph", "model"}));
  auto pure = build_input(doc, p, AnalysisMode::kPure, {1, 2});
  EXPECT_EQ(pure.tokens, (TokenSeq{"retrieval", ";", "data", "mining"}));
  auto aug = build_input(doc, p, AnalysisMode::kAugmented, {1});
  EXPECT_EQ(aug.tokens, (TokenSeq{"graph", "model", ";", "retrieval"}));
  EXPECT_EQ(aug.token_count, 4u);
  auto empty = build_input(doc, Portrait{}, AnalysisMode::kAugmented, {1});
  EXPECT_EQ(empty.tokens, (TokenSeq{"graph", "model", ";"}));
}

TEST(BuildInput, AugmentedIsOriginalThenSeparatorThenPure) {
  auto doc = two_level_doc();
  auto p = portrait_of({{{"a"}, 1}, {{"b"}, 2}, {{"c", "d"}, 3}, {{"e"}, 1}});
  for (auto levels : {std::vector<int>{1}, {1, 2}, {1, 2, 3}, {2}}) {
    auto o = build_input(doc, p, AnalysisMode::kOriginal, levels);
    auto u = build_input(doc, p, AnalysisMode::kPure, levels);
    auto a = build_input(doc, p, AnalysisMode::kAugmented, levels);
    EXPECT_EQ(a.token_count, o.token_count + 1 + u.token_count);
    TokenSeq expect = o.tokens;
    expect.push_back(";");
    expect.insert(expect.end(), u.tokens.begin(), u.tokens.end());
    EXPECT_EQ(a.tokens, expect);
  }
  // More levels never shrink the input.
  EXPECT_LE(build_input(doc, p, AnalysisMode::kPure, {1}).token_count,
            build_input(doc, p, AnalysisMode::kPure, {1, 2}).token_count);
}

TEST(Levels, ParseAndName) {
  EXPECT_EQ(parse_levels("1,2,3"), (std::vector<int>{1, 2, 3}));
  EXPECT_EQ(levels_name({1, 2}), "1,2");
  EXPECT_THROW(parse_levels(""), Error);
  EXPECT_THROW(parse_levels("1,x"), Error);
  EXPECT_THROW(parse_levels("0"), Error);
  EXPECT_EQ(parse_mode("augmented"), AnalysisMode::kAugmented);
  EXPECT_THROW(parse_mode("mixed"), Error);
}

TEST(NaiveBayes, HandComputedPosterior) {
  NaiveBayes nb;
  nb.train({{"a", "a", "b"}, {"b", "c"}}, {"x", "y"});
  auto post = nb.log_posterior({"a", "zzz"});
  // Vocabulary {a, b, c}; unseen "zzz" is skipped.
  EXPECT_NEAR(post.at("x"), std::log(0.5) + std::log(3.0 / 6.0), 1e-12);
  EXPECT_NEAR(post.at("y"), std::log(0.5) + std::log(1.0 / 5.0), 1e-12);
  EXPECT_EQ(nb.classify({"a"}), "x");
  EXPECT_EQ(nb.classify({"c"}), "y");
  // Equal scores go to the lexicographically smaller label.
  EXPECT_EQ(nb.classify({}), "x");
  EXPECT_THROW(nb.train({}, {}), Error);
  EXPECT_THROW(nb.train({{"a"}}, {"x", "y"}), Error);
  EXPECT_THROW(NaiveBayes{}.classify({"a"}), Error);
}

TEST(NaiveBayes, TrainingOrderDoesNotMatter) {
  std::vector<TokenSeq> xs = {{"a", "b"}, {"c"}, {"a", "c", "c"}, {"b"}};
  std::vector<std::string> ys = {"p", "q", "q", "p"};
  NaiveBayes f, r;
  f.train(xs, ys);
  r.train({xs.rbegin(), xs.rend()}, {ys.rbegin(), ys.rend()});
  for (const TokenSeq& q : {TokenSeq{"a"}, TokenSeq{"c", "b"}, TokenSeq{"b", "b", "c"}}) {
    auto a = f.log_posterior(q), b = r.log_posterior(q);
    for (const auto& [label, v] : a) EXPECT_DOUBLE_EQ(v, b.at(label));
  }
}

TEST(Scores, AccuracyAndMajority) {
  EXPECT_DOUBLE_EQ(accuracy({"a", "b", "b"}, {"a", "a", "b"}), 2.0 / 3.0);
  EXPECT_THROW(accuracy({"a"}, {}), Error);
  EXPECT_DOUBLE_EQ(majority_baseline({"b", "a", "b"}, {"b", "a", "a", "b"}), 0.5);
  EXPECT_DOUBLE_EQ(majority_baseline({"b", "a"}, {"a", "a", "b"}), 2.0 / 3.0);
}

TEST(Report, CsvAndTable) {
  std::vector<ModeResult> rs = {{AnalysisMode::kPure, {1}, 0.75, 3.5, 8}, {AnalysisMode::kOriginal, {1, 2, 3}, 1, 40, 8}};
  EXPECT_EQ(report_csv(rs),
            "mode,levels,accuracy,mean_tokens,documents\n"
            "pure,\"1\",0.7500,3.50,8\n"
            "original,\"1,2,3\",1.0000,40.00,8\n");
  EXPECT_EQ(report_table(rs),
            "mode      levels    Acc.   #Tks\n"
            "pure      1       0.7500   3.50\n"
            "original  1,2,3   1.0000  40.00\n");
}
