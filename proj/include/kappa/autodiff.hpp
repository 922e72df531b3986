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
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "kappa/parameters.hpp"
#include "kappa/tensor.hpp"

namespace kappa {

class Tape;

// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

// Bitmask of parameter groups whose gradients a tape records.
struct GradMode {
  bool encoder = false;
  bool decoder = false;

  static GradMode none() { return {}; }
  static GradMode all() { return {true, true}; }
  static GradMode encoder_only() { return {true, false}; }
  static GradMode decoder_only() { return {false, true}; }
  bool tracks(ParamGroup g) const { return g == ParamGroup::kEncoder ? encoder : decoder; }
  bool any() const { return encoder || decoder; }
};

// Records primitive operations in creation order. Nodes are appended only,
// so inputs always precede their consumers and a reverse sweep is a valid
// topological order for the backward pass.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(GradMode mode = GradMode::none()) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Free-standing leaf. Gradient is recorded when requires_grad is true,
  // regardless of the tape's parameter mode.
  Var leaf(Tensor value, bool requires_grad);
  // Leaf bound to a parameter (no copy). Its gradient is added to
  // Parameter::grad by backward() when the parameter's group is tracked.
  Var param(Parameter& p);

  // Runs the reverse sweep from a scalar node, seeding d(out)/d(out) = 1.
  void backward(Var out);
  // Same, with an explicit seed gradient of the output's shape.
  void backward(Var out, const Tensor& seed);

  const Tensor& value(std::size_t id) const;
  // Gradient accumulated at a node (zeros when none reached it).
  Tensor grad(Var v) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t backward_visits() const { return visits_; }
  GradMode mode() const { return mode_; }

  // Used by op implementations.
  Var push(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn);
  std::vector<double>& grad_buffer(std::size_t id);
  const std::vector<double>& grad_of(std::size_t id) const { return nodes_[id].grad; }

 private:
  struct Node {
    Tensor value;
    const Tensor* external = nullptr;
    std::vector<double> grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  GradMode mode_;
  std::deque<Node> nodes_;  // stable references across push()
  std::size_t visits_ = 0;
};

// ---- primitive operations --------------------------------------------------
// Matrices are rank-2; scalars have shape {1}.

Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
// Adds a 1 x cols (or rank-1) bias to every row.
Var add_row(Var a, Var bias);
Var gelu(Var a);
Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-6);

// out[r] = sum over table rows listed in bags[r].
Var embedding_bag(Var table, std::vector<std::vector<int>> bags);
Var gather_rows(Var table, std::span<const int> ids);
Var slice_cols(Var a, std::size_t start, std::size_t width);
Var concat_cols(std::span<const Var> parts);
Var select_rows(Var a, std::vector<std::size_t> rows);

// Softmax along axis 0 (columns) or 1 (rows). Max-shifted.
Var softmax(Var x, int axis = 1);
// Row softmax where entries with allowed[r*cols+c] == 0 get probability 0
// exactly and receive no gradient.
Var masked_softmax(Var x, std::shared_ptr<const std::vector<std::uint8_t>> allowed);
// out[r][c] = x[r][c] + table[bucket[r*cols+c]][column]
Var add_bucket_bias(Var x, Var table, std::shared_ptr<const std::vector<int>> bucket,
                    std::size_t column);

inline constexpr double kProbabilityFloor = 1e-12;

// -weight * log(max(p[target], floor)) for a probability vector p.
Var cross_entropy(Var p, std::size_t target_index, double weight = 1.0);
// Sum over rows r of -weights[r] * log(max(p[r][targets[r]], floor)).
Var cross_entropy_rows(Var p, std::vector<int> targets, std::vector<double> weights);

Var sum(Var a);
// sum(a .* c) for a constant c; injects c as the gradient of a.
Var dot_constant(Var a, Tensor c);

// ---- gradient verification -------------------------------------------------

struct GradCheckOptions {
  double step = 1e-6;
  std::size_t max_coordinates = 0;  // 0 = every coordinate
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
};

// f builds a scalar loss on the given tape from tape.param(p) for p in params.
// Compares the reverse-mode gradient with central differences.
GradCheckResult grad_check(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                           const GradCheckOptions& options = {});

}  // namespace kappa
