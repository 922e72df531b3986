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
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "kappa/tensor.hpp"

namespace kappa {

// Which half of the encoder-decoder a parameter belongs to. Training stages
// freeze one group while updating the other.
enum class ParamGroup : std::uint8_t { kEncoder = 1, kDecoder = 2 };

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  ParamGroup group = ParamGroup::kEncoder;
  bool decay = true;  // subject to decoupled weight decay
};

class ParameterStore {
 public:
  Parameter& add(std::string name, Tensor value, ParamGroup group, bool decay);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  // Copies every value tensor in a group; used to verify freezing contracts.
  std::vector<Tensor> snapshot(ParamGroup group) const;
  std::size_t count(ParamGroup group) const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// Seeded initializers.
Tensor init_uniform(Shape shape, double bound, std::mt19937_64& rng);
Tensor init_scaled_normal(Shape shape, std::size_t fan_in, std::mt19937_64& rng);

// Checkpoint container: magic, version, a free-form metadata string (JSON by
// convention), then each parameter's name, shape and little-endian float64
// payload. Loading is exact.
struct Checkpoint {
  std::string metadata;
  std::vector<std::pair<std::string, Tensor>> tensors;
};

void write_checkpoint(const std::filesystem::path& path, const std::string& metadata,
                      const ParameterStore& params);
Checkpoint read_checkpoint(const std::filesystem::path& path);
// Copies checkpoint tensors into an existing store; names and shapes must match.
void load_into(const Checkpoint& ckpt, ParameterStore& params);

}  // namespace kappa
