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

#include "kappa/document.hpp"

#include <fstream>
#include <json.hpp>

#include "kappa/error.hpp"

namespace kappa {

using nlohmann::json;

std::vector<TokenSeq> KeyphraseSet::all() const {
  std::vector<TokenSeq> out = present;
  out.insert(out.end(), absent.begin(), absent.end());
  return out;
}

TokenSeq MultiLevelDocument::all_tokens() const {
  TokenSeq out;
  for (const auto& s : segments) out.insert(out.end(), s.tokens.begin(), s.tokens.end());
  return out;
}

std::optional<std::size_t> find_run(const TokenSeq& haystack, const TokenSeq& needle, std::size_t from) {
  if (needle.empty() || needle.size() > haystack.size()) return std::nullopt;
  for (std::size_t i = from; i + needle.size() <= haystack.size(); ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < needle.size() && ok; ++j) ok = haystack[i + j] == needle[j];
    if (ok) return i;
  }
  return std::nullopt;
}

bool contains_run(const TokenSeq& haystack, const TokenSeq& needle) {
  return find_run(haystack, needle).has_value();
}

std::vector<DocumentSegment> split_claims(std::string_view claims, std::size_t max_segment_tokens) {
  if (max_segment_tokens < 32) throw Error("max_segment_tokens must be at least 32");
  std::vector<DocumentSegment> out;
  TokenSeq current;
  auto emit = [&] {
    if (current.empty()) return;
    out.push_back({std::move(current), static_cast<int>(out.size()) + 2});
    current.clear();
  };
  for (auto& sentence : split_sentences(claims)) {
    if (current.size() + sentence.size() <= max_segment_tokens) {
      current.insert(current.end(), sentence.begin(), sentence.end());
      continue;
    }
    emit();
    std::size_t pos = 0;
    while (sentence.size() - pos > max_segment_tokens) {
      current.assign(sentence.begin() + static_cast<std::ptrdiff_t>(pos),
                     sentence.begin() + static_cast<std::ptrdiff_t>(pos + max_segment_tokens));
      emit();
      pos += max_segment_tokens;
    }
    current.assign(sentence.begin() + static_cast<std::ptrdiff_t>(pos), sentence.end());
  }
  emit();
  return out;
}

MultiLevelDocument make_document(const DocumentRecord& record, std::size_t max_segment_tokens) {
  MultiLevelDocument doc;
  doc.doc_id = record.id;
  doc.label = record.label;
  doc.record = record;
  TokenSeq first = tokenize(record.title);
  TokenSeq abstract = tokenize(record.abstract);
  first.insert(first.end(), abstract.begin(), abstract.end());
  if (first.empty()) throw Error("document " + record.id + " has empty title and abstract");
  doc.segments.push_back({std::move(first), 1});
  for (auto& s : split_claims(record.claims, max_segment_tokens)) doc.segments.push_back(std::move(s));
  for (const auto& k : record.present_keyphrases) {
    TokenSeq t = tokenize(k);
    if (!t.empty()) doc.keyphrases.present.push_back(std::move(t));
  }
  for (const auto& k : record.absent_keyphrases) {
    TokenSeq t = tokenize(k);
    if (!t.empty()) doc.keyphrases.absent.push_back(std::move(t));
  }
  return doc;
}

std::string record_to_json_line(const DocumentRecord& r) {
  json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["abstract"] = r.abstract;
  j["claims"] = r.claims;
  j["present_keyphrases"] = r.present_keyphrases;
  j["absent_keyphrases"] = r.absent_keyphrases;
  if (r.label) j["label"] = *r.label;
  return j.dump();
}

DocumentRecord record_from_json_line(const std::string& line, std::size_t line_number) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what(), line_number);
  }
  if (!j.is_object()) throw ParseError("record is not an object", line_number);
  auto str = [&](const char* key) {
    if (!j.contains(key)) throw ParseError(std::string("record missing `") + key + "`", line_number);
    if (!j[key].is_string()) throw ParseError(std::string("`") + key + "` must be a string", line_number);
    return j[key].get<std::string>();
  };
  auto list = [&](const char* key) {
    std::vector<std::string> out;
    if (!j.contains(key)) throw ParseError(std::string("record missing `") + key + "`", line_number);
    if (!j[key].is_array()) throw ParseError(std::string("`") + key + "` must be an array", line_number);
    for (const auto& v : j[key]) {
      if (!v.is_string()) throw ParseError(std::string("`") + key + "` entries must be strings", line_number);
      out.push_back(v.get<std::string>());
    }
    return out;
  };
  DocumentRecord r;
  r.id = str("id");
  r.title = str("title");
  r.abstract = str("abstract");
  r.claims = str("claims");
  r.present_keyphrases = list("present_keyphrases");
  r.absent_keyphrases = list("absent_keyphrases");
  if (j.contains("label") && !j["label"].is_null()) {
    if (!j["label"].is_string()) throw ParseError("`label` must be a string", line_number);
    r.label = j["label"].get<std::string>();
  }
  return r;
}

std::vector<MultiLevelDocument> load_jsonl(const std::filesystem::path& path, std::size_t max_segment_tokens) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus: " + path.string());
  std::vector<MultiLevelDocument> docs;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    DocumentRecord r = record_from_json_line(line, n);
    try {
      docs.push_back(make_document(r, max_segment_tokens));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(e.what(), n);
    }
  }
  return docs;
}

void save_jsonl(const std::filesystem::path& path, const std::vector<MultiLevelDocument>& documents) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write corpus: " + path.string());
  for (const auto& d : documents) out << record_to_json_line(d.record) << '\n';
  if (!out) throw Error("failed writing corpus: " + path.string());
}

}  // namespace kappa
