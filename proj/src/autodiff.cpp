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

#include "kappa/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "kappa/error.hpp"

namespace kappa {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.data().data(), t.rows(), t.cols()); }

MutMap as_matrix(std::vector<double>& buf, std::size_t rows, std::size_t cols) {
  return MutMap(buf.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Tape& tape_of(Var a) {
  if (!a.tape) throw Error("operation on a detached variable");
  return *a.tape;
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape) throw Error("variables recorded on different tapes");
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()) + " differ");
}

void require_matrix(const char* op, Var a) {
  if (a.value().rank() != 2)
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_to_string(a.shape()));
}

// Gradient of the node being processed, as a read-only span.
std::span<const double> upstream(Tape& t, std::size_t self) { return t.grad_of(self); }

}  // namespace

const Tensor& Var::value() const { return tape->value(id); }

// ---- Tape --------------------------------------------------------------------

Var Tape::constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  Node n;
  n.external = &p.value;
  n.requires_grad = mode_.tracks(p.group);
  n.param = &p;
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.value;
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  const Tensor& val = value(v.id);
  if (n.grad.empty()) return Tensor(val.shape());
  return Tensor(val.shape(), n.grad);
}

std::vector<double>& Tape::grad_buffer(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(id).size(), 0.0);
  return n.grad;
}

Var Tape::push(Tensor value, std::vector<std::size_t> inputs, BackwardFn fn) {
  bool rg = false;
  for (auto i : inputs) rg = rg || nodes_[i].requires_grad;
  Node n;
  n.value = std::move(value);
  n.requires_grad = rg;
  if (rg) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var{this, nodes_.size() - 1};
}

void Tape::backward(Var out) {
  if (value(out.id).size() != 1)
    throw ShapeError("backward() needs a scalar, got " + shape_to_string(value(out.id).shape()));
  backward(out, Tensor(value(out.id).shape(), 1.0));
}

void Tape::backward(Var out, const Tensor& seed) {
  if (out.tape != this) throw Error("backward() on a variable from another tape");
  if (seed.shape() != value(out.id).shape())
    throw ShapeError("backward seed shape " + shape_to_string(seed.shape()) + " != output shape " +
                     shape_to_string(value(out.id).shape()));
  if (!nodes_[out.id].requires_grad) return;
  auto& g = grad_buffer(out.id);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += seed[i];
  for (std::size_t id = out.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    ++visits_;
    if (n.backward) n.backward(*this, id);
    if (n.param) {
      auto& pg = n.param->grad.storage();
      for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += n.grad[i];
    }
  }
}

// ---- linear algebra ------------------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() > 2 || B.rank() > 2 || A.cols() != B.rows())
    throw ShapeError("matmul: inner dimensions disagree for " + shape_to_string(A.shape()) + " x " +
                     shape_to_string(B.shape()));
  std::size_t m = A.rows(), n = B.cols();
  Tensor out({m, n});
  as_matrix(out.storage(), m, n).noalias() = as_matrix(A) * as_matrix(B);
  return tape_of(a).push(std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    const Tensor& C = t.value(self);
    ConstMap G(upstream(t, self).data(), C.rows(), C.cols());
    if (t.requires_grad(ia)) as_matrix(t.grad_buffer(ia), A.rows(), A.cols()).noalias() += G * as_matrix(B).transpose();
    if (t.requires_grad(ib)) as_matrix(t.grad_buffer(ib), B.rows(), B.cols()).noalias() += as_matrix(A).transpose() * G;
  });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() > 2 || B.rank() > 2 || A.cols() != B.cols())
    throw ShapeError("matmul_nt: inner dimensions disagree for " + shape_to_string(A.shape()) +
                     " x " + shape_to_string(B.shape()) + "^T");
  std::size_t m = A.rows(), n = B.rows();
  Tensor out({m, n});
  as_matrix(out.storage(), m, n).noalias() = as_matrix(A) * as_matrix(B).transpose();
  return tape_of(a).push(std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    const Tensor& A = t.value(ia);
    const Tensor& B = t.value(ib);
    const Tensor& C = t.value(self);
    ConstMap G(upstream(t, self).data(), C.rows(), C.cols());
    if (t.requires_grad(ia)) as_matrix(t.grad_buffer(ia), A.rows(), A.cols()).noalias() += G * as_matrix(B);
    if (t.requires_grad(ib)) as_matrix(t.grad_buffer(ib), B.rows(), B.cols()).noalias() += G.transpose() * as_matrix(A);
  });
}

// ---- elementwise -----------------------------------------------------------------

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("add", a, b);
  Tensor out = a.value();
  const auto& bv = b.value().storage();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return tape_of(a).push(std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    for (auto in : {ia, ib}) {
      if (!t.requires_grad(in)) continue;
      auto& d = t.grad_buffer(in);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("sub", a, b);
  Tensor out = a.value();
  const auto& bv = b.value().storage();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return tape_of(a).push(std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    if (t.requires_grad(ia)) {
      auto& d = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto& d = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape("mul", a, b);
  Tensor out = a.value();
  const auto& bv = b.value().storage();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return tape_of(a).push(std::move(out), {a.id, b.id}, [ia = a.id, ib = b.id](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    const auto& av = t.value(ia).storage();
    const auto& bv = t.value(ib).storage();
    if (t.requires_grad(ia)) {
      auto& d = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * bv[i];
    }
    if (t.requires_grad(ib)) {
      auto& d = t.grad_buffer(ib);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (auto& v : out.storage()) v *= s;
  return tape_of(a).push(std::move(out), {a.id}, [ia = a.id, s](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    auto& d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += s * g[i];
  });
}

Var add_row(Var a, Var bias) {
  require_same_tape(a, bias);
  require_matrix("add_row", a);
  const Tensor& A = a.value();
  const Tensor& B = bias.value();
  if (B.size() != A.cols())
    throw ShapeError("add_row: bias " + shape_to_string(B.shape()) + " does not fit rows of " +
                     shape_to_string(A.shape()));
  Tensor out = A;
  std::size_t r = A.rows(), c = A.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += B[j];
  return tape_of(a).push(std::move(out), {a.id, bias.id}, [ia = a.id, ib = bias.id, r, c](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    if (t.requires_grad(ia)) {
      auto& d = t.grad_buffer(ia);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto& d = t.grad_buffer(ib);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) d[j] += g[i * c + j];
    }
  });
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var gelu(Var a) {
  Tensor out = a.value();
  for (auto& x : out.storage()) x = 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  return tape_of(a).push(std::move(out), {a.id}, [ia = a.id](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    const auto& xs = t.value(ia).storage();
    auto& d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double x = xs[i];
      double th = std::tanh(kGeluC * (x + kGeluA * x * x * x));
      double dth = (1.0 - th * th) * kGeluC * (1.0 + 3.0 * kGeluA * x * x);
      d[i] += g[i] * (0.5 * (1.0 + th) + 0.5 * x * dth);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  require_matrix("layer_norm", x);
  const Tensor& X = x.value();
  std::size_t r = X.rows(), c = X.cols();
  if (gain.value().size() != c || bias.value().size() != c)
    throw ShapeError("layer_norm: gain/bias width does not match " + shape_to_string(X.shape()));
  const auto& G = gain.value().storage();
  const auto& B = bias.value().storage();
  Tensor out({r, c});
  // Cache normalized rows and inverse std for the backward pass.
  auto xhat = std::make_shared<std::vector<double>>(r * c);
  auto inv = std::make_shared<std::vector<double>>(r);
  for (std::size_t i = 0; i < r; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < c; ++j) mean += X[i * c + j];
    mean /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      double dv = X[i * c + j] - mean;
      var += dv * dv;
    }
    var /= static_cast<double>(c);
    double is = 1.0 / std::sqrt(var + eps);
    (*inv)[i] = is;
    for (std::size_t j = 0; j < c; ++j) {
      double h = (X[i * c + j] - mean) * is;
      (*xhat)[i * c + j] = h;
      out[i * c + j] = h * G[j] + B[j];
    }
  }
  return tape_of(x).push(
      std::move(out), {x.id, gain.id, bias.id},
      [ix = x.id, ig = gain.id, ib = bias.id, r, c, xhat, inv](Tape& t, std::size_t self) {
        auto g = upstream(t, self);
        const auto& G = t.value(ig).storage();
        if (t.requires_grad(ig)) {
          auto& d = t.grad_buffer(ig);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) d[j] += g[i * c + j] * (*xhat)[i * c + j];
        }
        if (t.requires_grad(ib)) {
          auto& d = t.grad_buffer(ib);
          for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) d[j] += g[i * c + j];
        }
        if (t.requires_grad(ix)) {
          auto& d = t.grad_buffer(ix);
          std::vector<double> dh(c);
          for (std::size_t i = 0; i < r; ++i) {
            double m1 = 0.0, m2 = 0.0;
            for (std::size_t j = 0; j < c; ++j) {
              dh[j] = g[i * c + j] * G[j];
              m1 += dh[j];
              m2 += dh[j] * (*xhat)[i * c + j];
            }
            m1 /= static_cast<double>(c);
            m2 /= static_cast<double>(c);
            for (std::size_t j = 0; j < c; ++j)
              d[i * c + j] += (*inv)[i] * (dh[j] - m1 - (*xhat)[i * c + j] * m2);
          }
        }
      });
}

// ---- indexing ----------------------------------------------------------------------

Var embedding_bag(Var table, std::vector<std::vector<int>> bags) {
  require_matrix("embedding_bag", table);
  const Tensor& T = table.value();
  std::size_t rows = T.rows(), c = T.cols();
  for (const auto& bag : bags)
    for (int id : bag)
      if (id < 0 || static_cast<std::size_t>(id) >= rows)
        throw Error("embedding index " + std::to_string(id) + " outside table of " +
                    std::to_string(rows) + " rows");
  Tensor out({bags.size(), c});
  for (std::size_t r = 0; r < bags.size(); ++r)
    for (int id : bags[r])
      for (std::size_t j = 0; j < c; ++j) out[r * c + j] += T[static_cast<std::size_t>(id) * c + j];
  auto shared = std::make_shared<std::vector<std::vector<int>>>(std::move(bags));
  return tape_of(table).push(std::move(out), {table.id}, [it = table.id, c, shared](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    auto& d = t.grad_buffer(it);
    for (std::size_t r = 0; r < shared->size(); ++r)
      for (int id : (*shared)[r])
        for (std::size_t j = 0; j < c; ++j) d[static_cast<std::size_t>(id) * c + j] += g[r * c + j];
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  std::vector<std::vector<int>> bags;
  bags.reserve(ids.size());
  for (int id : ids) bags.push_back({id});
  return embedding_bag(table, std::move(bags));
}

Var slice_cols(Var a, std::size_t start, std::size_t width) {
  require_matrix("slice_cols", a);
  const Tensor& A = a.value();
  std::size_t r = A.rows(), c = A.cols();
  if (start + width > c)
    throw ShapeError("slice_cols: [" + std::to_string(start) + ", " + std::to_string(start + width) +
                     ") outside " + shape_to_string(A.shape()));
  Tensor out({r, width});
  for (std::size_t i = 0; i < r; ++i)
    std::copy_n(A.data().begin() + static_cast<std::ptrdiff_t>(i * c + start), width,
                out.storage().begin() + static_cast<std::ptrdiff_t>(i * width));
  return tape_of(a).push(std::move(out), {a.id}, [ia = a.id, r, c, start, width](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    auto& d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < width; ++j) d[i * c + start + j] += g[i * width + j];
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  std::size_t r = parts[0].value().rows();
  std::size_t total = 0;
  std::vector<std::size_t> ids, widths;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    require_matrix("concat_cols", p);
    if (p.value().rows() != r) throw ShapeError("concat_cols: row counts differ");
    ids.push_back(p.id);
    widths.push_back(p.value().cols());
    total += p.value().cols();
  }
  Tensor out({r, total});
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& P = p.value();
    std::size_t w = P.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + off + j] = P[i * w + j];
    off += w;
  }
  auto in_ids = ids;
  return tape_of(parts[0]).push(std::move(out), std::move(in_ids), [ids, widths, r, total](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      std::size_t w = widths[k];
      if (t.requires_grad(ids[k])) {
        auto& d = t.grad_buffer(ids[k]);
        for (std::size_t i = 0; i < r; ++i)
          for (std::size_t j = 0; j < w; ++j) d[i * w + j] += g[i * total + off + j];
      }
      off += w;
    }
  });
}

Var select_rows(Var a, std::vector<std::size_t> rows) {
  require_matrix("select_rows", a);
  const Tensor& A = a.value();
  std::size_t c = A.cols();
  for (auto r : rows)
    if (r >= A.rows()) throw ShapeError("select_rows: row " + std::to_string(r) + " outside " + shape_to_string(A.shape()));
  Tensor out({rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = A[rows[i] * c + j];
  return tape_of(a).push(std::move(out), {a.id}, [ia = a.id, rows = std::move(rows), c](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    auto& d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) d[rows[i] * c + j] += g[i * c + j];
  });
}

// ---- softmax family ----------------------------------------------------------------

namespace {

// Softmax over `n` elements spaced by `stride`, starting at `base`.
void softmax_strided(const double* x, double* y, std::size_t n, std::size_t stride, const std::uint8_t* allowed) {
  double mx = -INFINITY;
  for (std::size_t i = 0; i < n; ++i)
    if (!allowed || allowed[i * stride]) mx = std::max(mx, x[i * stride]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double e = (!allowed || allowed[i * stride]) ? std::exp(x[i * stride] - mx) : 0.0;
    y[i * stride] = e;
    z += e;
  }
  for (std::size_t i = 0; i < n; ++i) y[i * stride] /= z;
}

void softmax_backward_strided(const double* y, const double* g, double* d, std::size_t n, std::size_t stride) {
  double dot = 0.0;
  for (std::size_t i = 0; i < n; ++i) dot += g[i * stride] * y[i * stride];
  for (std::size_t i = 0; i < n; ++i) d[i * stride] += y[i * stride] * (g[i * stride] - dot);
}

}  // namespace

Var softmax(Var x, int axis) {
  const Tensor& X = x.value();
  if (axis != 0 && axis != 1) throw ShapeError("softmax: axis must be 0 or 1");
  std::size_t r = X.rows(), c = X.cols();
  Tensor out(X.shape());
  if (axis == 1) {
    for (std::size_t i = 0; i < r; ++i) softmax_strided(X.data().data() + i * c, &out[i * c], c, 1, nullptr);
  } else {
    for (std::size_t j = 0; j < c; ++j) softmax_strided(X.data().data() + j, &out[j], r, c, nullptr);
  }
  return tape_of(x).push(std::move(out), {x.id}, [ix = x.id, axis, r, c](Tape& t, std::size_t self) {
    const double* y = t.value(self).data().data();
    const double* g = upstream(t, self).data();
    double* d = t.grad_buffer(ix).data();
    if (axis == 1) {
      for (std::size_t i = 0; i < r; ++i) softmax_backward_strided(y + i * c, g + i * c, d + i * c, c, 1);
    } else {
      for (std::size_t j = 0; j < c; ++j) softmax_backward_strided(y + j, g + j, d + j, r, c);
    }
  });
}

Var masked_softmax(Var x, std::shared_ptr<const std::vector<std::uint8_t>> allowed) {
  require_matrix("masked_softmax", x);
  const Tensor& X = x.value();
  std::size_t r = X.rows(), c = X.cols();
  if (!allowed || allowed->size() != r * c) throw ShapeError("masked_softmax: mask size mismatch");
  for (std::size_t i = 0; i < r; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) any = any || (*allowed)[i * c + j];
    if (!any) throw Error("masked_softmax: row " + std::to_string(i) + " is fully masked");
  }
  Tensor out({r, c});
  for (std::size_t i = 0; i < r; ++i) softmax_strided(X.data().data() + i * c, &out[i * c], c, 1, allowed->data() + i * c);
  return tape_of(x).push(std::move(out), {x.id}, [ix = x.id, r, c](Tape& t, std::size_t self) {
    // Masked entries have y == 0, so they receive exactly zero gradient.
    const double* y = t.value(self).data().data();
    const double* g = upstream(t, self).data();
    double* d = t.grad_buffer(ix).data();
    for (std::size_t i = 0; i < r; ++i) softmax_backward_strided(y + i * c, g + i * c, d + i * c, c, 1);
  });
}

Var add_bucket_bias(Var x, Var table, std::shared_ptr<const std::vector<int>> bucket, std::size_t column) {
  require_same_tape(x, table);
  require_matrix("add_bucket_bias", x);
  const Tensor& X = x.value();
  const Tensor& T = table.value();
  std::size_t r = X.rows(), c = X.cols(), tc = T.cols();
  if (!bucket || bucket->size() != r * c) throw ShapeError("add_bucket_bias: bucket map size mismatch");
  if (column >= tc) throw ShapeError("add_bucket_bias: column outside table");
  Tensor out = X;
  for (std::size_t i = 0; i < r * c; ++i) {
    int b = (*bucket)[i];
    if (b < 0 || static_cast<std::size_t>(b) >= T.rows()) throw Error("add_bucket_bias: bucket out of range");
    out[i] += T[static_cast<std::size_t>(b) * tc + column];
  }
  return tape_of(x).push(std::move(out), {x.id, table.id}, [ix = x.id, it = table.id, bucket, column, tc](Tape& t, std::size_t self) {
    auto g = upstream(t, self);
    if (t.requires_grad(ix)) {
      auto& d = t.grad_buffer(ix);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (t.requires_grad(it)) {
      auto& d = t.grad_buffer(it);
      for (std::size_t i = 0; i < g.size(); ++i) d[static_cast<std::size_t>((*bucket)[i]) * tc + column] += g[i];
    }
  });
}

// ---- losses and reductions -----------------------------------------------------------

Var cross_entropy(Var p, std::size_t target_index, double weight) {
  const Tensor& P = p.value();
  if (target_index >= P.size())
    throw Error("cross_entropy: target index " + std::to_string(target_index) + " outside distribution of size " +
                std::to_string(P.size()));
  double pt = P[target_index];
  double loss = weight == 0.0 ? 0.0 : -weight * std::log(std::max(pt, kProbabilityFloor));
  return tape_of(p).push(Tensor::scalar(loss), {p.id}, [ip = p.id, target_index, weight](Tape& t, std::size_t self) {
    double g = upstream(t, self)[0];
    double pt = t.value(ip)[target_index];
    if (weight == 0.0 || pt <= kProbabilityFloor) return;
    t.grad_buffer(ip)[target_index] += -weight * g / pt;
  });
}

Var cross_entropy_rows(Var p, std::vector<int> targets, std::vector<double> weights) {
  require_matrix("cross_entropy_rows", p);
  const Tensor& P = p.value();
  std::size_t r = P.rows(), c = P.cols();
  if (targets.size() != r || weights.size() != r) throw ShapeError("cross_entropy_rows: one target and weight per row");
  double loss = 0.0;
  for (std::size_t i = 0; i < r; ++i) {
    if (targets[i] < 0 || static_cast<std::size_t>(targets[i]) >= c)
      throw Error("cross_entropy_rows: target index " + std::to_string(targets[i]) + " outside vocabulary of " +
                  std::to_string(c));
    if (weights[i] == 0.0) continue;
    loss += -weights[i] * std::log(std::max(P[i * c + static_cast<std::size_t>(targets[i])], kProbabilityFloor));
  }
  return tape_of(p).push(Tensor::scalar(loss), {p.id},
                         [ip = p.id, targets = std::move(targets), weights = std::move(weights), c](Tape& t, std::size_t self) {
                           double g = upstream(t, self)[0];
                           const Tensor& P = t.value(ip);
                           auto& d = t.grad_buffer(ip);
                           for (std::size_t i = 0; i < targets.size(); ++i) {
                             std::size_t k = i * c + static_cast<std::size_t>(targets[i]);
                             if (weights[i] == 0.0 || P[k] <= kProbabilityFloor) continue;
                             d[k] += -weights[i] * g / P[k];
                           }
                         });
}

Var sum(Var a) {
  const auto& v = a.value().storage();
  double s = std::accumulate(v.begin(), v.end(), 0.0);
  return tape_of(a).push(Tensor::scalar(s), {a.id}, [ia = a.id](Tape& t, std::size_t self) {
    double g = upstream(t, self)[0];
    auto& d = t.grad_buffer(ia);
    for (auto& x : d) x += g;
  });
}

Var dot_constant(Var a, Tensor c) {
  if (c.size() != a.value().size())
    throw ShapeError("dot_constant: " + shape_to_string(a.shape()) + " vs " + shape_to_string(c.shape()));
  const auto& v = a.value().storage();
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) s += v[i] * c[i];
  return tape_of(a).push(Tensor::scalar(s), {a.id}, [ia = a.id, c = std::move(c)](Tape& t, std::size_t self) {
    double g = upstream(t, self)[0];
    auto& d = t.grad_buffer(ia);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += g * c[i];
  });
}

// ---- gradient check ------------------------------------------------------------------

GradCheckResult grad_check(const std::function<Var(Tape&)>& f, std::span<Parameter* const> params,
                           const GradCheckOptions& options) {
  for (Parameter* p : params) std::fill(p->grad.storage().begin(), p->grad.storage().end(), 0.0);
  std::vector<Tensor> analytic;
  {
    Tape tape(GradMode::all());
    Var loss = f(tape);
    if (!std::isfinite(loss.value().item())) throw Error("grad_check: non-finite loss");
    tape.backward(loss);
    for (Parameter* p : params) analytic.push_back(p->grad);
  }

  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t i = 0; i < params.size(); ++i)
    for (std::size_t j = 0; j < params[i]->value.size(); ++j) coords.emplace_back(i, j);
  if (options.max_coordinates && options.max_coordinates < coords.size()) {
    std::mt19937_64 rng(options.seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(options.max_coordinates);
  }

  auto eval = [&] {
    Tape tape(GradMode::none());
    double v = f(tape).value().item();
    if (!std::isfinite(v)) throw Error("grad_check: non-finite loss");
    return v;
  };

  GradCheckResult result;
  for (auto [pi, j] : coords) {
    double& x = params[pi]->value[j];
    const double orig = x;
    x = orig + options.step;
    double up = eval();
    x = orig - options.step;
    double down = eval();
    x = orig;
    double numeric = (up - down) / (2.0 * options.step);
    double a = analytic[pi][j];
    double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
    ++result.coordinates;
  }
  return result;
}

}  // namespace kappa
