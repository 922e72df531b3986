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

#include <atomic>
#include <map>
#include <stdexcept>

#include "kappa/error.hpp"
#include "kappa/run_config.hpp"

using namespace kappa;

TEST(RunConfig, SetsKnownKeys) {
  RunConfig c;
  c.set("d", "32");
  c.set("slots", "6");
  c.set("use_kcc", "false");
  c.set("alpha_g", "0.001");
  c.set("seed", "9");
  EXPECT_EQ(c.model.d, 32u);
  EXPECT_EQ(c.model.N, 6u);
  EXPECT_FALSE(c.model.use_kcc);
  EXPECT_DOUBLE_EQ(c.tsmt.alpha_g, 0.001);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.tsmt.seed, 9u);
  EXPECT_THROW(c.set("depth", "3"), Error);
  EXPECT_THROW(c.set("d", "-3"), Error);
  EXPECT_THROW(c.set("d", "3x"), Error);
  EXPECT_THROW(c.set("use_kwp", "maybe"), Error);
}

TEST(RunConfig, ValuesRoundTrip) {
  RunConfig c;
  c.set("lambda_w", "0.3");
  c.set("levels", "1,2");
  RunConfig d;
  d.apply(c.values());
  EXPECT_EQ(d.values(), c.values());
  EXPECT_EQ(c.values().size(), RunConfig::keys().size());
}

TEST(RunConfig, LaterSourcesWin) {
  // Defaults, then file, then environment, then --set.
  RunConfig c;
  c.apply({{"d", "48"}, {"epochs", "7"}, {"batch", "4"}});
  std::map<std::string, std::string> env = {{"KAPPA_EPOCHS", "9"}, {"KAPPA_BATCH", "5"}};
  c.apply_env([&](const char* name) -> const char* {
    auto it = env.find(name);
    return it == env.end() ? nullptr : it->second.c_str();
  });
  c.set("batch", "6");
  EXPECT_EQ(c.model.d, 48u);
  EXPECT_EQ(c.tsmt.E, 9u);
  EXPECT_EQ(c.tsmt.batch, 6u);
  EXPECT_EQ(c.model.n_heads, ModelConfig{}.n_heads);
}

TEST(ParallelFor, EveryIndexOnceAndErrorsPropagate) {
  for (std::size_t threads : {1, 2, 4}) {
    std::vector<int> hits(100, 0);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i] += static_cast<int>(i); });
    for (std::size_t i = 0; i < hits.size(); ++i) EXPECT_EQ(hits[i], static_cast<int>(i));
  }
  EXPECT_THROW(parallel_for(10, 2, [](std::size_t i) {
                 if (i == 3) throw std::runtime_error("boom");
               }),
               std::runtime_error);
  std::atomic<int> calls{0};
  parallel_for(0, 3, [&](std::size_t) { ++calls; });
  EXPECT_EQ(calls.load(), 0);
}
