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

#include <sys/wait.h>

#include "cli_runner.hpp"
#include "kappa/bundle.hpp"
#include "kappa/inference.hpp"
#include "test_support.hpp"

using namespace kappa;
using kappa::testing::read_file;
using kappa::testing::run_cli;
using kappa::testing::scratch_dir;

namespace {

const char* kSmall =
    "--set d=16 --set n_heads=2 --set n_enc_layers=1 --set n_dec_layers=1 --set ffn_width=32 --set slots=8 "
    "--set n_k=2";

std::string q(const std::filesystem::path& p) { return "\"" + p.string() + "\""; }

}  // namespace

TEST(Cli, GenCorpusIsByteStable) {
  auto dir = scratch_dir("cli_gen");
  ASSERT_EQ(run_cli("gen-corpus --seed 7 --n 12 --out " + q(dir / "a.jsonl"), dir).status, 0);
  ASSERT_EQ(run_cli("gen-corpus --seed 7 --n 12 --out " + q(dir / "b.jsonl"), dir).status, 0);
  ASSERT_EQ(run_cli("gen-corpus --seed 8 --n 12 --out " + q(dir / "c.jsonl"), dir).status, 0);
  EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
  EXPECT_NE(read_file(dir / "a.jsonl"), read_file(dir / "c.jsonl"));
  EXPECT_EQ(load_jsonl(dir / "a.jsonl").size(), 12u);
}

TEST(Cli, EvalOfPerfectPredictionsScoresOne) {
  auto dir = scratch_dir("cli_eval");
  ASSERT_EQ(run_cli("gen-corpus --n 6 --out " + q(dir / "c.jsonl"), dir).status, 0);
  std::vector<Portrait> ps;
  for (const auto& d : load_jsonl(dir / "c.jsonl")) {
    Portrait p;
    p.doc_id = d.doc_id;
    for (const auto& k : d.keyphrases.present) p.entries.push_back({k, 1, SlotGroup::kPresent, 1.0});
    for (const auto& k : d.keyphrases.absent) p.entries.push_back({k, 1, SlotGroup::kAbsent, 1.0});
    ps.push_back(p);
  }
  save_portraits(dir / "p.jsonl", ps);
  auto r = run_cli("eval --predictions " + q(dir / "p.jsonl") + " --corpus " + q(dir / "c.jsonl") + " --out " +
                       q(dir / "e.csv"),
                   dir);
  ASSERT_EQ(r.status, 0) << r.err;
  auto csv = read_file(dir / "e.csv");
  std::vector<std::string> cells;
  std::stringstream macro(csv.substr(csv.find("MACRO")));
  for (std::string c; std::getline(macro, c, ',');) cells.push_back(c);
  ASSERT_GE(cells.size(), 9u);
  EXPECT_EQ(cells[2], "1.000000");  // present F1@M
  EXPECT_EQ(cells[8], "1.000000");  // absent F1@M
}

TEST(Cli, StageOneOnlyTrainingKeepsDecoderAtInitialisation) {
  auto dir = scratch_dir("cli_train");
  ASSERT_EQ(run_cli("gen-corpus --n 4 --out " + q(dir / "c.jsonl"), dir).status, 0);
  auto r = run_cli(std::string("train ") + kSmall + " --seed 5 --set epochs=2 --set stage1_epochs=2 --corpus " +
                       q(dir / "c.jsonl") + " --out " + q(dir / "m.ckpt"),
                   dir);
  ASSERT_EQ(r.status, 0) << r.err;
  auto bundle = load_bundle(dir / "m.ckpt");
  Model init(bundle.model->config(), 5);
  auto& trained = bundle.model->params();
  for (std::size_t i = 0; i < trained.size(); ++i) {
    if (trained[i].group == ParamGroup::kDecoder)
      EXPECT_EQ(trained[i].value, init.params()[i].value) << trained[i].name;
  }
  EXPECT_FALSE(trained.get("kwe.w").value == init.params().get("kwe.w").value);
  auto loss = read_file(dir / "m.ckpt.loss.csv");
  EXPECT_EQ(std::count(loss.begin(), loss.end(), '\n'), 3);
}

TEST(Cli, FailuresExitNonZeroWithOneLineDiagnostic) {
  auto dir = scratch_dir("cli_fail");
  auto missing = run_cli("train --corpus " + q(dir / "nope.jsonl") + " --out " + q(dir / "m.ckpt"), dir);
  EXPECT_NE(missing.status, 0);
  EXPECT_EQ(missing.err.rfind("kappa: error: missing corpus file", 0), 0u);
  EXPECT_EQ(std::count(missing.err.begin(), missing.err.end(), '\n'), 1);

  std::ofstream(dir / "bad.cfg") << "d = 16\nthis line is wrong\n";
  auto bad = run_cli("gen-corpus --config " + q(dir / "bad.cfg") + " --out " + q(dir / "c.jsonl"), dir);
  EXPECT_NE(bad.status, 0);
  EXPECT_NE(bad.err.find("line 2"), std::string::npos);

  auto unknown = run_cli("gen-corpus --set wings=2 --out " + q(dir / "c.jsonl"), dir);
  EXPECT_NE(unknown.status, 0);
  EXPECT_NE(unknown.err.find("wings"), std::string::npos);

  auto ckpt = run_cli("portrait --checkpoint " + q(dir / "none.ckpt") + " --corpus " + q(dir / "c.jsonl") +
                          " --out " + q(dir / "p.jsonl"),
                      dir);
  EXPECT_NE(ckpt.status, 0);
  EXPECT_EQ(ckpt.err.rfind("kappa: error: missing checkpoint", 0), 0u);
}

TEST(Cli, ConfigFileAndEnvironmentPrecedence) {
  auto dir = scratch_dir("cli_cfg");
  std::ofstream(dir / "run.cfg") << "seed = 3\n";
  ASSERT_EQ(run_cli("gen-corpus --n 5 --config " + q(dir / "run.cfg") + " --out " + q(dir / "a.jsonl"), dir).status, 0);
  ASSERT_EQ(run_cli("gen-corpus --n 5 --seed 3 --out " + q(dir / "b.jsonl"), dir).status, 0);
  EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "b.jsonl"));
  // A flag beats the config file.
  ASSERT_EQ(run_cli("gen-corpus --n 5 --config " + q(dir / "run.cfg") + " --seed 4 --out " + q(dir / "c.jsonl"), dir)
                .status,
            0);
  EXPECT_NE(read_file(dir / "a.jsonl"), read_file(dir / "c.jsonl"));
  ASSERT_EQ(run_cli("gen-corpus --n 5 --seed 4 --out " + q(dir / "d.jsonl"), dir).status, 0);
  EXPECT_EQ(read_file(dir / "c.jsonl"), read_file(dir / "d.jsonl"));
  // The environment sits between the file and the flags.
  auto env = std::string("KAPPA_SEED=3 \"") + KAPPA_CLI + "\" gen-corpus --n 5 --out " + q(dir / "e.jsonl");
  ASSERT_EQ(std::system(env.c_str()), 0);
  EXPECT_EQ(read_file(dir / "a.jsonl"), read_file(dir / "e.jsonl"));
}
