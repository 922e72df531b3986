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
#include <vector>

#include "kappa/model.hpp"

namespace kappa {

enum class TargetOrigin : std::uint8_t { kGroundTruth, kKeyword, kNull };

struct TargetEntry {
  TokenSeq tokens;  // empty for the null target
  TargetOrigin origin = TargetOrigin::kNull;

  bool is_null() const { return origin == TargetOrigin::kNull; }
  friend bool operator==(const TargetEntry&, const TargetEntry&) = default;
};

// N/2 entries per group. Slots 0..N/2-1 serve the present group, the rest the
// absent group.
struct TargetList {
  std::vector<TargetEntry> present;
  std::vector<TargetEntry> absent;

  std::size_t size() const { return present.size() + absent.size(); }
};

class Vocabulary;

// Token ids of a target without the terminating EOS; the null target is the
// single null token.
std::vector<int> target_ids(const TargetEntry& entry, const Vocabulary& vocab);

using CostMatrix = std::vector<std::vector<double>>;

struct AssignmentPolicy {
  std::vector<std::size_t> perm;  // perm[n] = target index for slot n
  double total = 0.0;             // summed in slot order
};

// Free-running greedy decode for k steps; returns k tensors of shape N x |V|,
// the t-th holding p^t_n in row n.
std::vector<Tensor> k_step_predict(const Model& model, const Tensor& h_enc, const SlotKeywords& keywords,
                                   std::size_t k);

// cost[n][j] = -sum_{t < min(k, |T_j|)} [T_j^t != null] p^t_{slot_begin+n}(T_j^t)
CostMatrix build_cost(const std::vector<std::vector<int>>& targets, const std::vector<Tensor>& dists,
                      std::size_t k, std::size_t slot_begin, std::size_t n_slots);
CostMatrix build_cost(const std::vector<std::vector<int>>& targets, const std::vector<Tensor>& dists,
                      std::size_t k);

double policy_cost(const CostMatrix& cost, const std::vector<std::size_t>& perm);

// Optimal permutation for a square matrix. Among optimal permutations (within
// a relative 1e-12) the lexicographically smallest is returned.
AssignmentPolicy hungarian(const CostMatrix& cost);
// Exhaustive oracle for n <= 8 with the same tie rule.
AssignmentPolicy brute_force(const CostMatrix& cost);

struct SlotAssignment {
  AssignmentPolicy present;
  AssignmentPolicy absent;
  std::vector<Tensor> dists;
};

SlotAssignment assign(const Model& model, const Tensor& h_enc, const SlotKeywords& keywords,
                      const std::vector<std::vector<int>>& present_ids,
                      const std::vector<std::vector<int>>& absent_ids, std::size_t k);

}  // namespace kappa
