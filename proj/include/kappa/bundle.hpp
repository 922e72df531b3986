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

#include <filesystem>
#include <memory>

#include "kappa/model.hpp"
#include "kappa/vocabulary.hpp"

namespace kappa {

// A checkpoint whose metadata carries the model config and vocabulary, so a
// model can be rebuilt without the training corpus.
struct ModelBundle {
  std::unique_ptr<Model> model;
  Vocabulary vocab;
};

std::string bundle_metadata(const ModelConfig& config, const Vocabulary& vocab);
void save_bundle(const std::filesystem::path& path, const Model& model, const Vocabulary& vocab);
ModelBundle load_bundle(const std::filesystem::path& path);

}  // namespace kappa
