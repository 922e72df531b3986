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

#include "kappa/inference.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <map>
#include <set>

#include "kappa/error.hpp"
#include "kappa/training.hpp"

namespace kappa {

using nlohmann::json;

TokenSeq PromptedInput::tokens() const {
  TokenSeq out = prompt_tokens;
  out.insert(out.end(), body_tokens.begin(), body_tokens.end());
  return out;
}

namespace {

std::string join_phrases(const std::vector<TokenSeq>& phrases) {
  std::string s;
  for (std::size_t i = 0; i < phrases.size(); ++i) {
    if (i) s += ", ";
    s += join(phrases[i]);
  }
  return s;
}

}  // namespace

std::string render_prompt(const std::vector<TokenSeq>& previous, const TokenSeq& body) {
  return std::string(kPromptHead) + join_phrases(previous) + std::string(kPromptTail) + join(body);
}

TokenSeq prompt_template_tokens() { return tokenize(std::string(kPromptHead) + std::string(kPromptTail)); }

PromptedInput make_prompted_input(const std::vector<TokenSeq>& previous, const TokenSeq& body, std::size_t max_len) {
  PromptedInput in;
  in.previous = previous;
  in.rendered = render_prompt(previous, body);
  in.prompt_tokens = tokenize(std::string(kPromptHead) + join_phrases(previous) + std::string(kPromptTail));
  if (in.prompt_tokens.size() >= max_len)
    throw Error("prompt of " + std::to_string(in.prompt_tokens.size()) + " tokens leaves no room for the body");
  std::size_t room = max_len - in.prompt_tokens.size();
  in.body_tokens.assign(body.begin(), body.begin() + static_cast<std::ptrdiff_t>(std::min(room, body.size())));
  return in;
}

// ---- slot generation ----------------------------------------------------------------

std::vector<SlotOutput> generate_slots(const Model& model, const Vocabulary& vocab, const Tensor& h_enc,
                                       const SlotKeywords& keywords) {
  const auto& cfg = model.config();
  const std::size_t N = cfg.N, V = cfg.vocab_size;
  std::vector<std::vector<int>> prefix(N, std::vector<int>{kPad});
  std::vector<std::vector<int>> emitted(N);
  std::vector<std::vector<double>> probs(N);
  std::vector<bool> done(N, false);
  for (std::size_t t = 1; t <= cfg.m; ++t) {
    Tape tape;
    Var p = model.decode(tape, tape.constant(h_enc), prefix, keywords);
    const Tensor& P = p.value();
    bool all_done = true;
    for (std::size_t n = 0; n < N; ++n) {
      int next = kPad;
      if (!done[n]) {
        std::size_t row = n * t + (t - 1);
        // PAD is never a valid output.
        std::size_t best = 1;
        for (std::size_t v = 2; v < V; ++v)
          if (P.at(row, v) > P.at(row, best)) best = v;
        next = static_cast<int>(best);
        bool stop = next == kEos || (t == 1 && next == kNull);
        if (next != kEos) {
          emitted[n].push_back(next);
          probs[n].push_back(P.at(row, best));
        }
        done[n] = stop;
      }
      prefix[n].push_back(next);
      all_done = all_done && done[n];
    }
    if (all_done) break;
  }
  std::vector<SlotOutput> out(N);
  for (std::size_t n = 0; n < N; ++n) {
    SlotOutput& s = out[n];
    s.is_null = !emitted[n].empty() && emitted[n][0] == kNull;
    if (!s.is_null) s.tokens = vocab.decode(emitted[n]);
    double sum = 0.0;
    for (double q : probs[n]) sum += q;
    s.confidence = probs[n].empty() ? 0.0 : sum / static_cast<double>(probs[n].size());
  }
  return out;
}

std::vector<SlotOutput> generate_slots(const Model& model, const Vocabulary& vocab, const PromptedInput& input,
                                       const SlotKeywords& keywords) {
  Tape tape;
  Var h = model.encode(tape, vocab.encode(input.tokens()));
  return generate_slots(model, vocab, h.value(), keywords);
}

// ---- filtering ------------------------------------------------------------------------

std::string_view group_name(SlotGroup g) { return g == SlotGroup::kPresent ? "present" : "absent"; }

std::vector<PortraitEntry> filter_predictions(const std::vector<SlotOutput>& raw,
                                              const std::vector<TokenSeq>& padding_keywords, int level) {
  std::set<TokenSeq> padding(padding_keywords.begin(), padding_keywords.end());
  std::vector<PortraitEntry> out;
  std::map<std::string, std::size_t> by_key;
  const std::size_t half = raw.size() / 2;
  for (std::size_t n = 0; n < raw.size(); ++n) {
    const auto& s = raw[n];
    if (s.is_null || s.tokens.empty() || padding.count(s.tokens)) continue;
    PortraitEntry e{s.tokens, level, n < half ? SlotGroup::kPresent : SlotGroup::kAbsent, s.confidence};
    auto key = stem_key(s.tokens);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      by_key.emplace(key, out.size());
      out.push_back(std::move(e));
    } else if (e.confidence > out[it->second].confidence) {
      out[it->second] = std::move(e);
    }
  }
  return out;
}

// ---- PHD --------------------------------------------------------------------------------

LevelKeywords extract_keywords(const Model& model, const Vocabulary& vocab, const TokenSeq& body) {
  const auto& cfg = model.config();
  TokenSeq clipped(body.begin(), body.begin() + static_cast<std::ptrdiff_t>(std::min(body.size(), cfg.max_input_len)));
  Tape tape;
  Var p = model.kwe_forward(tape, model.encode(tape, vocab.encode(clipped)));
  LevelKeywords out;
  out.predicted = predict_keywords(p.value(), clipped, clipped.size());
  std::vector<std::vector<int>> ranked;
  for (const auto& k : out.predicted) ranked.push_back(vocab.encode(k.tokens));
  out.slots = model.slot_keywords(ranked);
  return out;
}

std::vector<TokenSeq> inference_padding_keywords(const MultiLevelDocument& doc, const TokenSeq& segment,
                                                 const std::vector<KeywordSpan>& predicted) {
  if (doc.keyphrases.present.empty() && doc.keyphrases.absent.empty()) return {};
  std::vector<KeywordSpan> all = predicted;
  for (auto& k : derive_keywords(segment, doc.keyphrases)) all.push_back(std::move(k));
  std::vector<TokenSeq> out;
  for (const auto& k : padding_keywords(doc.keyphrases, all)) out.push_back(k.tokens);
  return out;
}

namespace {

Portrait run_levels(const Model& model, const Vocabulary& vocab, const MultiLevelDocument& doc, bool chained) {
  if (doc.segments.empty()) throw Error("document " + doc.doc_id + " has no segments");
  Portrait portrait;
  portrait.doc_id = doc.doc_id;
  std::set<std::string> seen;
  std::vector<TokenSeq> previous;
  for (const auto& seg : doc.segments) {
    LevelRecord rec;
    rec.level = seg.level_index;
    auto kw = extract_keywords(model, vocab, seg.tokens);
    rec.keywords = kw.predicted;
    // K_0 and every unchained level use this level's own keywords.
    if (!chained || portrait.levels.empty()) {
      auto by_start = kw.predicted;
      std::stable_sort(by_start.begin(), by_start.end(),
                       [](const KeywordSpan& a, const KeywordSpan& b) { return a.start < b.start; });
      previous.clear();
      for (const auto& k : by_start) previous.push_back(k.tokens);
    }
    rec.input = make_prompted_input(previous, seg.tokens, model.config().max_input_len);
    rec.raw = generate_slots(model, vocab, rec.input, kw.slots);
    rec.padding_keywords = inference_padding_keywords(doc, seg.tokens, kw.predicted);
    rec.kept = filter_predictions(rec.raw, rec.padding_keywords, rec.level);
    previous.clear();
    for (const auto& e : rec.kept) {
      previous.push_back(e.tokens);
      if (seen.insert(stem_key(e.tokens)).second) portrait.entries.push_back(e);
    }
    portrait.levels.push_back(std::move(rec));
  }
  return portrait;
}

}  // namespace

Portrait phd_portrait(const Model& model, const Vocabulary& vocab, const MultiLevelDocument& doc) {
  return run_levels(model, vocab, doc, true);
}

Portrait generate_per_segment(const Model& model, const Vocabulary& vocab, const MultiLevelDocument& doc) {
  return run_levels(model, vocab, doc, false);
}

// ---- portrait JSONL -----------------------------------------------------------------------

std::string portrait_to_json_line(const Portrait& p) {
  json j;
  j["id"] = p.doc_id;
  json kps = json::array();
  for (const auto& e : p.entries)
    kps.push_back({{"text", join(e.tokens)},
                   {"level", e.level},
                   {"group", std::string(group_name(e.group))},
                   {"confidence", e.confidence}});
  j["keyphrases"] = kps;
  json levels = json::array();
  for (const auto& l : p.levels) {
    json slots = json::array();
    for (const auto& s : l.raw) {
      json slot;
      slot["text"] = s.is_null ? json(nullptr) : json(join(s.tokens));
      slot["confidence"] = s.confidence;
      slots.push_back(slot);
    }
    levels.push_back({{"level", l.level}, {"prompt", l.input.rendered}, {"slots", slots}});
  }
  j["levels"] = levels;
  return j.dump();
}

Portrait portrait_from_json_line(const std::string& line, std::size_t line_number) {
  Portrait p;
  try {
    json j = json::parse(line);
    p.doc_id = j.at("id").get<std::string>();
    for (const auto& e : j.at("keyphrases")) {
      PortraitEntry pe;
      pe.tokens = tokenize(e.at("text").get<std::string>());
      pe.level = e.at("level").get<int>();
      auto g = e.at("group").get<std::string>();
      if (g != "present" && g != "absent") throw ParseError("unknown group `" + g + "`", line_number);
      pe.group = g == "present" ? SlotGroup::kPresent : SlotGroup::kAbsent;
      pe.confidence = e.at("confidence").get<double>();
      p.entries.push_back(std::move(pe));
    }
    if (j.contains("levels")) {
      for (const auto& l : j.at("levels")) {
        LevelRecord rec;
        rec.level = l.at("level").get<int>();
        rec.input.rendered = l.value("prompt", "");
        for (const auto& s : l.at("slots")) {
          SlotOutput so;
          so.is_null = s.at("text").is_null();
          if (!so.is_null) so.tokens = tokenize(s.at("text").get<std::string>());
          so.confidence = s.value("confidence", 0.0);
          rec.raw.push_back(std::move(so));
        }
        p.levels.push_back(std::move(rec));
      }
    }
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError(std::string("malformed portrait record: ") + e.what(), line_number);
  }
  return p;
}

void save_portraits(const std::filesystem::path& path, const std::vector<Portrait>& portraits) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write portraits: " + path.string());
  for (const auto& p : portraits) out << portrait_to_json_line(p) << '\n';
}

std::vector<Portrait> load_portraits(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open portraits: " + path.string());
  std::vector<Portrait> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(portrait_from_json_line(line, n));
  }
  return out;
}

}  // namespace kappa
