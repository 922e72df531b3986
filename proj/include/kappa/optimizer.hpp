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

#include <vector>

#include "kappa/parameters.hpp"

namespace kappa {

// Adam with decoupled weight decay. Only parameters of the requested group are
// touched by step(); the other group stays bit-identical.
class AdamW {
 public:
  struct Options {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
  };

  AdamW(ParameterStore& params, Options options);

  void step(ParamGroup group, double lr);
  void step(ParamGroup group) { step(group, options_.lr); }
  const Options& options() const { return options_; }

 private:
  ParameterStore& params_;
  Options options_;
  std::vector<std::vector<double>> m_, v_;
  std::vector<long> t_;
};

}  // namespace kappa
