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

#include "kappa/position.hpp"

#include <algorithm>
#include <cmath>

#include "kappa/error.hpp"

namespace kappa {

std::vector<double> dope_ape(std::size_t t, std::size_t d) {
  if (d % 2 != 0) throw Error("dope_ape: width must be even");
  std::vector<double> e(d);
  for (std::size_t i = 0; i < d / 2; ++i) {
    double angle = static_cast<double>(t) / std::pow(10000.0, 2.0 * static_cast<double>(i) / static_cast<double>(d));
    e[2 * i] = std::sin(angle);
    e[2 * i + 1] = std::cos(angle);
  }
  return e;
}

int dope_rpe_bucket(long u, long v, int n_buckets, int max_distance, bool bidirectional) {
  if (u < 0 || v < 0) throw Error("dope_rpe_bucket: positions must be non-negative");
  long rel = v - u;
  int ret = 0;
  int buckets = n_buckets;
  long n;
  if (bidirectional) {
    buckets /= 2;
    if (rel > 0) ret += buckets;
    n = std::labs(rel);
  } else {
    n = std::max(-rel, 0L);
  }
  int max_exact = buckets / 2;
  if (n < max_exact) return ret + static_cast<int>(n);
  double large = max_exact + std::log(static_cast<double>(n) / max_exact) /
                                 std::log(static_cast<double>(max_distance) / max_exact) * (buckets - max_exact);
  int b = std::min(static_cast<int>(large), buckets - 1);
  return ret + b;
}

}  // namespace kappa
