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

#include <algorithm>
#include <filesystem>
#include <set>

#include "kappa/error.hpp"
#include "kappa/inference.hpp"
#include "kappa/metrics.hpp"
#include "test_support.hpp"

using namespace kappa;
using kappa::testing::tiny_config;

namespace {

SlotOutput slot(TokenSeq t, double c) { return {std::move(t), false, c}; }
SlotOutput null_slot() { return {{}, true, 0.9}; }

class PhdTest : public ::testing::Test {
 protected:
  void SetUp() override {
    docs = synth_corpus(17, 3, SynthProfile{});
    vocab = build_vocabulary(docs);
    auto c = tiny_config(vocab.size());
    c.N = 8;
    c.N_K = 2;
    model = std::make_unique<Model>(c, 2);
  }
  std::vector<MultiLevelDocument> docs;
  Vocabulary vocab;
  std::unique_ptr<Model> model;
};

}  // namespace

TEST(Prompt, TemplateIsBitExact) {
  EXPECT_EQ(render_prompt({{"graph"}}, {"a", "b"}), "keyphrases from higher-level: graph [sep] find keyphrases from: a b");
  EXPECT_EQ(render_prompt({{"graph", "model"}, {"node"}}, {"x"}),
            "keyphrases from higher-level: graph model, node [sep] find keyphrases from: x");
  EXPECT_EQ(render_prompt({}, {"x"}), "keyphrases from higher-level:  [sep] find keyphrases from: x");
}

TEST(Prompt, TokensAndTruncation) {
  auto in = make_prompted_input({{"graph"}}, {"a", "b", "c", "d"}, 100);
  EXPECT_EQ(in.prompt_tokens,
            (TokenSeq{"keyphrases", "from", "higher", "level", "graph", "[sep]", "find", "keyphrases", "from"}));
  EXPECT_EQ(in.body_tokens, (TokenSeq{"a", "b", "c", "d"}));
  EXPECT_EQ(in.separator, "[sep]");
  auto cut = make_prompted_input({{"graph"}}, {"a", "b", "c", "d"}, in.prompt_tokens.size() + 2);
  EXPECT_EQ(cut.prompt_tokens, in.prompt_tokens);
  EXPECT_EQ(cut.body_tokens, (TokenSeq{"a", "b"}));
  EXPECT_EQ(cut.rendered, in.rendered);
  EXPECT_THROW(make_prompted_input({{"graph"}}, {"a"}, in.prompt_tokens.size()), Error);
}

TEST(FilterPredictions, Examples) {
  auto kept = filter_predictions({null_slot(), slot({"graph", "model"}, 0.5), null_slot(), null_slot()}, {}, 1);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].tokens, (TokenSeq{"graph", "model"}));
  EXPECT_EQ(kept[0].group, SlotGroup::kPresent);

  EXPECT_TRUE(filter_predictions({slot({"graph"}, 0.9), slot({}, 0.1)}, {{"graph"}}, 1).empty());

  auto merged = filter_predictions(
      {slot({"neural", "networks"}, 0.4), slot({"neural", "network"}, 0.8), slot({"x"}, 0.1), slot({"y"}, 0.2)}, {}, 2);
  ASSERT_EQ(merged.size(), 3u);
  EXPECT_EQ(merged[0].tokens, (TokenSeq{"neural", "network"}));
  EXPECT_EQ(merged[0].level, 2);
  EXPECT_EQ(merged[2].group, SlotGroup::kAbsent);
}

TEST(FilterPredictions, OutputHasNoNullsOrStemClashes) {
  std::vector<SlotOutput> raw = {slot({"connections"}, 0.3), slot({"connected"}, 0.6), null_slot(),
                                 slot({"connecting"}, 0.2), slot({"graph"}, 0.5), slot({"graphs"}, 0.7)};
  auto kept = filter_predictions(raw, {}, 1);
  std::set<std::string> keys;
  for (const auto& e : kept) {
    EXPECT_FALSE(e.tokens.empty());
    EXPECT_TRUE(keys.insert(stem_key(e.tokens)).second);
  }
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].tokens, TokenSeq{"connected"});
  EXPECT_EQ(kept[1].tokens, TokenSeq{"graphs"});
}

TEST_F(PhdTest, GenerateSlotsIsBoundedAndDeterministic) {
  auto in = make_prompted_input({}, docs[0].segments[0].tokens, model->config().max_input_len);
  SlotKeywords kw(model->config().N);
  auto a = generate_slots(*model, vocab, in, kw);
  auto b = generate_slots(*model, vocab, in, kw);
  ASSERT_EQ(a.size(), model->config().N);
  for (std::size_t n = 0; n < a.size(); ++n) {
    EXPECT_LE(a[n].tokens.size(), model->config().m);
    EXPECT_EQ(a[n].tokens, b[n].tokens);
    EXPECT_EQ(a[n].confidence, b[n].confidence);
    EXPECT_GE(a[n].confidence, 0.0);
    EXPECT_LE(a[n].confidence, 1.0);
  }
}

TEST_F(PhdTest, LevelOnePromptUsesItsOwnKeywords) {
  for (const auto& doc : docs) {
    auto p = phd_portrait(*model, vocab, doc);
    ASSERT_EQ(p.levels.size(), doc.segments.size());
    const auto& first = p.levels[0];
    auto by_start = first.keywords;
    std::stable_sort(by_start.begin(), by_start.end(),
                     [](const KeywordSpan& a, const KeywordSpan& b) { return a.start < b.start; });
    std::vector<TokenSeq> k0;
    for (const auto& k : by_start) k0.push_back(k.tokens);
    EXPECT_EQ(first.input.previous, k0);
    EXPECT_EQ(first.input.rendered, render_prompt(k0, doc.segments[0].tokens));
    for (std::size_t l = 1; l < p.levels.size(); ++l) {
      std::vector<TokenSeq> prev;
      for (const auto& e : p.levels[l - 1].kept) prev.push_back(e.tokens);
      EXPECT_EQ(p.levels[l].input.previous, prev);
    }
  }
}

TEST_F(PhdTest, PortraitInvariantsAndDeterminism) {
  for (const auto& doc : docs) {
    auto a = phd_portrait(*model, vocab, doc);
    auto b = phd_portrait(*model, vocab, doc);
    EXPECT_EQ(portrait_to_json_line(a), portrait_to_json_line(b));
    std::set<std::string> keys;
    for (const auto& e : a.entries) {
      EXPECT_FALSE(e.tokens.empty());
      EXPECT_NE(e.tokens, TokenSeq{std::string(kNullText)});
      EXPECT_TRUE(keys.insert(stem_key(e.tokens)).second);
    }
    // Per-segment generation prompts every level with its own keywords.
    auto seg = generate_per_segment(*model, vocab, doc);
    for (const auto& rec : seg.levels) {
      std::vector<KeywordSpan> by_start = rec.keywords;
      std::stable_sort(by_start.begin(), by_start.end(),
                       [](const KeywordSpan& x, const KeywordSpan& y) { return x.start < y.start; });
      ASSERT_EQ(rec.input.previous.size(), by_start.size());
      for (std::size_t i = 0; i < by_start.size(); ++i) EXPECT_EQ(rec.input.previous[i], by_start[i].tokens);
    }
  }
}

TEST_F(PhdTest, PortraitJsonRoundTrip) {
  std::vector<Portrait> ps;
  for (const auto& doc : docs) ps.push_back(phd_portrait(*model, vocab, doc));
  Portrait extra;
  extra.doc_id = "x\"1";
  extra.entries.push_back({{"café", "model"}, 2, SlotGroup::kAbsent, 0.25});
  ps.push_back(extra);
  auto path = std::filesystem::temp_directory_path() / "kappa_test_portraits.jsonl";
  save_portraits(path, ps);
  auto back = load_portraits(path);
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i) {
    EXPECT_EQ(back[i].doc_id, ps[i].doc_id);
    ASSERT_EQ(back[i].entries.size(), ps[i].entries.size());
    for (std::size_t j = 0; j < ps[i].entries.size(); ++j) {
      EXPECT_EQ(back[i].entries[j].tokens, ps[i].entries[j].tokens);
      EXPECT_EQ(back[i].entries[j].level, ps[i].entries[j].level);
      EXPECT_EQ(back[i].entries[j].group, ps[i].entries[j].group);
      EXPECT_EQ(back[i].entries[j].confidence, ps[i].entries[j].confidence);
    }
    EXPECT_EQ(portrait_to_json_line(back[i]), portrait_to_json_line(ps[i]));
  }
  EXPECT_THROW(portrait_from_json_line("{\"id\": 3}", 7), ParseError);
  try {
    portrait_from_json_line(R"({"id":"a","keyphrases":[{"text":"x","level":1,"group":"side","confidence":1}]})", 4);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(InferencePadding, NeedsGroundTruth) {
  MultiLevelDocument doc;
  doc.doc_id = "d";
  EXPECT_TRUE(inference_padding_keywords(doc, {"a", "b"}, {{{"a"}, 0, 0.9}}).empty());
  doc.keyphrases.present = {{"a", "b"}};
  auto pad = inference_padding_keywords(doc, {"a", "b", "c"}, {{{"c"}, 2, 0.9}, {{"a", "b"}, 0, 0.8}});
  EXPECT_EQ(pad, (std::vector<TokenSeq>{{"c"}}));
}
