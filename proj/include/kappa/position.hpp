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

#include <cstddef>
#include <vector>

namespace kappa {

// Sinusoidal absolute position: [2i] = sin(t / 10000^(2i/d)), [2i+1] = cos(...).
std::vector<double> dope_ape(std::size_t t, std::size_t d);

// Bucket of the relative offset v - u. Half of the buckets (per sign when
// bidirectional) hold exact small offsets; the rest are log-spaced up to
// max_distance, past which every offset shares the last bucket of its sign.
// Unidirectional mode is for causal attention: only u >= v is meaningful and
// non-positive offsets map by magnitude.
int dope_rpe_bucket(long u, long v, int n_buckets, int max_distance, bool bidirectional = true);

}  // namespace kappa
