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
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kappa/model.hpp"
#include "kappa/training.hpp"

namespace kappa {

// Everything a CLI run can be configured with. Keys are lowercase; the
// environment form is KAPPA_ followed by the upper-cased key.
struct RunConfig {
  ModelConfig model;
  TsmtConfig tsmt;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  std::size_t max_segment_tokens = kDefaultMaxSegmentTokens;
  std::string levels = "1,2,3";
  std::string mode = "pure";

  // Throws Error on an unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  void apply(const std::map<std::string, std::string>& values);
  // Reads KAPPA_<KEY> for every known key through `getenv`.
  void apply_env(const std::function<const char*(const char*)>& getenv);
  std::map<std::string, std::string> values() const;

  static const std::vector<std::string>& keys();
};

inline constexpr std::string_view kEnvPrefix = "KAPPA_";

// Calls fn(i) for i in [0, n) on up to `threads` workers. Each index is
// handled exactly once, so results written by index are thread-count
// independent.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace kappa
