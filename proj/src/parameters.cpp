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

#include "kappa/parameters.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "kappa/error.hpp"

namespace kappa {

namespace {

constexpr char kMagic[8] = {'K', 'A', 'P', 'P', 'A', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw Error("checkpoint truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw Error("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

std::string get_bytes(std::istream& is, std::uint64_t n) {
  if (n > (1ULL << 32)) throw Error("checkpoint field too large");
  std::string s(n, '\0');
  if (n && !is.read(s.data(), static_cast<std::streamsize>(n))) throw Error("checkpoint truncated");
  return s;
}

}  // namespace

Parameter& ParameterStore::add(std::string name, Tensor value, ParamGroup group, bool decay) {
  if (contains(name)) throw Error("duplicate parameter name: " + name);
  auto p = std::make_unique<Parameter>();
  p->name = std::move(name);
  p->grad = Tensor(value.shape());
  p->value = std::move(value);
  p->group = group;
  p->decay = decay;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterStore::get(const std::string& name) {
  for (auto& p : params_)
    if (p->name == name) return *p;
  throw Error("unknown parameter: " + name);
}

const Parameter& ParameterStore::get(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return *p;
  throw Error("unknown parameter: " + name);
}

bool ParameterStore::contains(const std::string& name) const {
  for (const auto& p : params_)
    if (p->name == name) return true;
  return false;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) std::fill(p->grad.storage().begin(), p->grad.storage().end(), 0.0);
}

std::vector<Tensor> ParameterStore::snapshot(ParamGroup group) const {
  std::vector<Tensor> out;
  for (const auto& p : params_)
    if (p->group == group) out.push_back(p->value);
  return out;
}

std::size_t ParameterStore::count(ParamGroup group) const {
  std::size_t n = 0;
  for (const auto& p : params_)
    if (p->group == group) n += p->value.size();
  return n;
}

Tensor init_uniform(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = dist(rng);
  return t;
}

Tensor init_scaled_normal(Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0 / std::sqrt(static_cast<double>(fan_in)));
  Tensor t(std::move(shape));
  for (auto& v : t.storage()) v = dist(rng);
  return t;
}

void write_checkpoint(const std::filesystem::path& path, const std::string& metadata,
                      const ParameterStore& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open checkpoint for writing: " + path.string());
  os.write(kMagic, sizeof kMagic);
  put_u32(os, kVersion);
  put_u64(os, metadata.size());
  os.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  put_u64(os, params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = params[i];
    put_u32(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_u32(os, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) put_u64(os, d);
    for (double v : p.value.data()) put_u64(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw Error("failed writing checkpoint: " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw Error("not a checkpoint file: " + path.string());
  std::uint32_t version = get_u32(is);
  if (version != kVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  Checkpoint ckpt;
  ckpt.metadata = get_bytes(is, get_u64(is));
  std::uint64_t count = get_u64(is);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::string name = get_bytes(is, get_u32(is));
    std::uint32_t rank = get_u32(is);
    if (rank > 8) throw Error("corrupt checkpoint: rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = get_u64(is);
    std::size_t n = shape_size(shape);
    if (n > (1ULL << 30)) throw Error("corrupt checkpoint: tensor too large");
    std::vector<double> data(n);
    for (auto& v : data) v = std::bit_cast<double>(get_u64(is));
    ckpt.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  return ckpt;
}

void load_into(const Checkpoint& ckpt, ParameterStore& params) {
  if (ckpt.tensors.size() != params.size())
    throw Error("checkpoint has " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                std::to_string(params.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    Parameter& p = params.get(name);
    if (p.value.shape() != t.shape())
      throw ShapeError("checkpoint tensor " + name + " has shape " + shape_to_string(t.shape()) +
                       ", model expects " + shape_to_string(p.value.shape()));
    p.value = t;
  }
}

}  // namespace kappa
