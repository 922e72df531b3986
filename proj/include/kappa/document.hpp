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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kappa/text.hpp"

namespace kappa {

struct DocumentSegment {
  TokenSeq tokens;
  int level_index = 1;
};

struct KeyphraseSet {
  std::vector<TokenSeq> present;
  std::vector<TokenSeq> absent;

  std::vector<TokenSeq> all() const;
};

// One JSONL line as stored on disk. Strings are kept untokenized so that
// save/load is byte-exact.
struct DocumentRecord {
  std::string id;
  std::string title;
  std::string abstract;
  std::string claims;
  std::vector<std::string> present_keyphrases;
  std::vector<std::string> absent_keyphrases;
  std::optional<std::string> label;

  friend bool operator==(const DocumentRecord&, const DocumentRecord&) = default;
};

// Level 1 is Title followed by Abstract; levels 2..C+1 are claim segments.
struct MultiLevelDocument {
  std::string doc_id;
  std::vector<DocumentSegment> segments;
  KeyphraseSet keyphrases;
  std::optional<std::string> label;
  DocumentRecord record;

  // Every body token of every level, in order.
  TokenSeq all_tokens() const;
};

inline constexpr std::size_t kDefaultMaxSegmentTokens = 48;

// Greedy packing of claim sentences ('.'/';' boundaries) into segments of at
// most max_segment_tokens; an over-long sentence is hard-split. Segments are
// numbered from level 2.
std::vector<DocumentSegment> split_claims(std::string_view claims, std::size_t max_segment_tokens);

MultiLevelDocument make_document(const DocumentRecord& record,
                                 std::size_t max_segment_tokens = kDefaultMaxSegmentTokens);

std::vector<MultiLevelDocument> load_jsonl(const std::filesystem::path& path,
                                           std::size_t max_segment_tokens = kDefaultMaxSegmentTokens);
void save_jsonl(const std::filesystem::path& path, const std::vector<MultiLevelDocument>& documents);

std::string record_to_json_line(const DocumentRecord& record);
DocumentRecord record_from_json_line(const std::string& line, std::size_t line_number);

// True when needle occurs as a contiguous run inside haystack.
bool contains_run(const TokenSeq& haystack, const TokenSeq& needle);
std::optional<std::size_t> find_run(const TokenSeq& haystack, const TokenSeq& needle, std::size_t from = 0);

}  // namespace kappa
