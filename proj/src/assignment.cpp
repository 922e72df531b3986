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

#include "kappa/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "kappa/error.hpp"
#include "kappa/vocabulary.hpp"

namespace kappa {

std::vector<int> target_ids(const TargetEntry& entry, const Vocabulary& vocab) {
  if (entry.is_null()) return {kNull};
  return vocab.encode(entry.tokens);
}

std::vector<Tensor> k_step_predict(const Model& model, const Tensor& h_enc, const SlotKeywords& keywords,
                                   std::size_t k) {
  if (k == 0) throw Error("k_step_predict: k must be at least 1");
  const std::size_t N = model.config().N, V = model.config().vocab_size;
  std::vector<std::vector<int>> prefix(N, std::vector<int>{kPad});
  std::vector<Tensor> out;
  for (std::size_t t = 1; t <= k; ++t) {
    Tape tape;
    Var p = model.decode(tape, tape.constant(h_enc), prefix, keywords);
    const Tensor& P = p.value();
    Tensor step({N, V});
    for (std::size_t n = 0; n < N; ++n) {
      std::size_t row = n * t + (t - 1);
      std::size_t best = 1;
      for (std::size_t v = 0; v < V; ++v) {
        step.at(n, v) = P.at(row, v);
        if (v > 0 && P.at(row, v) > P.at(row, best)) best = v;
      }
      prefix[n].push_back(static_cast<int>(best));
    }
    out.push_back(std::move(step));
  }
  return out;
}

CostMatrix build_cost(const std::vector<std::vector<int>>& targets, const std::vector<Tensor>& dists, std::size_t k,
                      std::size_t slot_begin, std::size_t n_slots) {
  if (dists.size() < k) throw Error("build_cost: fewer distributions than k");
  CostMatrix cost(n_slots, std::vector<double>(targets.size(), 0.0));
  for (std::size_t j = 0; j < targets.size(); ++j) {
    const auto& T = targets[j];
    std::size_t f = std::min(k, T.size());
    for (std::size_t t = 0; t < f; ++t) {
      int w = T[t];
      if (w < 0 || static_cast<std::size_t>(w) >= dists[t].cols())
        throw Error("build_cost: target token " + std::to_string(w) + " outside vocabulary");
      if (w == kNull) continue;
      for (std::size_t n = 0; n < n_slots; ++n) cost[n][j] -= dists[t].at(slot_begin + n, static_cast<std::size_t>(w));
    }
  }
  return cost;
}

CostMatrix build_cost(const std::vector<std::vector<int>>& targets, const std::vector<Tensor>& dists, std::size_t k) {
  if (dists.empty()) throw Error("build_cost: no distributions");
  return build_cost(targets, dists, k, 0, dists[0].rows());
}

double policy_cost(const CostMatrix& cost, const std::vector<std::size_t>& perm) {
  double s = 0.0;
  for (std::size_t n = 0; n < perm.size(); ++n) s += cost[n][perm[n]];
  return s;
}

namespace {

std::size_t check_square(const CostMatrix& cost) {
  std::size_t n = cost.size();
  for (const auto& row : cost) {
    if (row.size() != n) throw Error("assignment: cost matrix must be square");
    for (double c : row)
      if (!std::isfinite(c)) throw Error("assignment: non-finite cost");
  }
  return n;
}

// Kuhn-Munkres with row/column potentials, O(n^3), on the submatrix picked
// out by rows x cols. Returns the column chosen for each listed row.
std::vector<std::size_t> solve(const CostMatrix& cost, const std::vector<std::size_t>& rows,
                               const std::vector<std::size_t>& cols) {
  const std::size_t n = rows.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      std::size_t i0 = p[j0], j1 = 0;
      double delta = inf;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[rows[i0 - 1]][cols[j - 1]] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> assign(n);
  for (std::size_t j = 1; j <= n; ++j) assign[p[j] - 1] = cols[j - 1];
  return assign;
}

double tolerance(double best) { return 1e-12 * std::max(1.0, std::fabs(best)); }

}  // namespace

AssignmentPolicy hungarian(const CostMatrix& cost) {
  const std::size_t n = check_square(cost);
  if (n == 0) return {};
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  auto opt = solve(cost, all, all);
  const double best = policy_cost(cost, opt);
  const double tol = tolerance(best);

  // Lexicographic refinement: fix slots in order, each to the smallest column
  // that still admits an optimal completion.
  std::vector<std::size_t> perm;
  std::vector<std::size_t> free_cols = all;
  double prefix = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> rest_rows(all.begin() + static_cast<std::ptrdiff_t>(i + 1), all.end());
    bool placed = false;
    for (std::size_t c = 0; c < free_cols.size() && !placed; ++c) {
      std::size_t j = free_cols[c];
      std::vector<std::size_t> rest_cols = free_cols;
      rest_cols.erase(rest_cols.begin() + static_cast<std::ptrdiff_t>(c));
      double total = prefix + cost[i][j];
      if (!rest_rows.empty()) {
        auto completion = solve(cost, rest_rows, rest_cols);
        for (std::size_t r = 0; r < rest_rows.size(); ++r) total += cost[rest_rows[r]][completion[r]];
      }
      if (total <= best + tol) {
        perm.push_back(j);
        prefix += cost[i][j];
        free_cols = std::move(rest_cols);
        placed = true;
      }
    }
    if (!placed) return {opt, best};  // unreachable barring rounding pathologies
  }
  return {perm, policy_cost(cost, perm)};
}

AssignmentPolicy brute_force(const CostMatrix& cost) {
  const std::size_t n = check_square(cost);
  if (n > 8) throw Error("brute_force: n = " + std::to_string(n) + " exceeds 8");
  if (n == 0) return {};
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do best = std::min(best, policy_cost(cost, perm));
  while (std::next_permutation(perm.begin(), perm.end()));
  const double tol = tolerance(best);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    if (policy_cost(cost, perm) <= best + tol) return {perm, policy_cost(cost, perm)};
  } while (std::next_permutation(perm.begin(), perm.end()));
  throw Error("brute_force: no permutation reached the minimum");
}

SlotAssignment assign(const Model& model, const Tensor& h_enc, const SlotKeywords& keywords,
                      const std::vector<std::vector<int>>& present_ids,
                      const std::vector<std::vector<int>>& absent_ids, std::size_t k) {
  const std::size_t half = model.config().half();
  if (present_ids.size() != half || absent_ids.size() != half)
    throw Error("assign: each group needs exactly N/2 targets");
  SlotAssignment out;
  out.dists = k_step_predict(model, h_enc, keywords, k);
  out.present = hungarian(build_cost(present_ids, out.dists, k, 0, half));
  out.absent = hungarian(build_cost(absent_ids, out.dists, k, half, half));
  return out;
}

}  // namespace kappa
