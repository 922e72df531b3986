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

#include "kappa/optimizer.hpp"

#include <cmath>

namespace kappa {

AdamW::AdamW(ParameterStore& params, Options options) : params_(params), options_(options) {
  m_.resize(params.size());
  v_.resize(params.size());
  t_.assign(params.size(), 0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i].assign(params[i].value.size(), 0.0);
    v_[i].assign(params[i].value.size(), 0.0);
  }
}

void AdamW::step(ParamGroup group, double lr) {
  const auto& o = options_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = params_[i];
    if (p.group != group) continue;
    long t = ++t_[i];
    double c1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
    auto& m = m_[i];
    auto& v = v_[i];
    auto& w = p.value.storage();
    const auto& g = p.grad.storage();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = o.beta1 * m[j] + (1.0 - o.beta1) * g[j];
      v[j] = o.beta2 * v[j] + (1.0 - o.beta2) * g[j] * g[j];
      double mh = m[j] / c1;
      double vh = v[j] / c2;
      if (p.decay) w[j] -= lr * o.weight_decay * w[j];
      w[j] -= lr * mh / (std::sqrt(vh) + o.eps);
    }
  }
}

}  // namespace kappa
