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

#include "kappa/bundle.hpp"

#include <json.hpp>

#include "kappa/error.hpp"

namespace kappa {

using nlohmann::json;

namespace {
constexpr const char* kFormat = "kappa-model";
}

std::string bundle_metadata(const ModelConfig& config, const Vocabulary& vocab) {
  json j;
  j["format"] = kFormat;
  j["model"] = json::parse(config.to_json());
  j["vocab"] = vocab.tokens();
  return j.dump();
}

void save_bundle(const std::filesystem::path& path, const Model& model, const Vocabulary& vocab) {
  if (model.config().vocab_size != vocab.size())
    throw Error("vocabulary has " + std::to_string(vocab.size()) + " tokens but the model expects " +
                std::to_string(model.config().vocab_size));
  write_checkpoint(path, bundle_metadata(model.config(), vocab), model.params());
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  Checkpoint ckpt = read_checkpoint(path);
  json meta;
  try {
    meta = json::parse(ckpt.metadata);
  } catch (const json::exception&) {
    throw Error("checkpoint metadata is not JSON: " + path.string());
  }
  if (meta.value("format", "") != kFormat) throw Error("not a model checkpoint: " + path.string());
  ModelConfig config = ModelConfig::from_json(meta.at("model").dump());
  ModelBundle b;
  b.vocab = Vocabulary::from_tokens(meta.at("vocab").get<std::vector<std::string>>());
  if (b.vocab.size() != config.vocab_size)
    throw Error("vocabulary mismatch in " + path.string() + ": " + std::to_string(b.vocab.size()) +
                " tokens for a model of " + std::to_string(config.vocab_size));
  // Parameters are overwritten by the checkpoint; the seed is irrelevant.
  b.model = std::make_unique<Model>(config, 0);
  load_into(ckpt, b.model->params());
  return b;
}

}  // namespace kappa
