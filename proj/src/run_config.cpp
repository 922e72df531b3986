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

#include "kappa/run_config.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "kappa/error.hpp"

namespace kappa {

namespace {

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw Error("");
    unsigned long long x = std::stoull(v, &used);
    if (used != v.size()) throw Error("");
    return static_cast<std::size_t>(x);
  } catch (const std::exception&) {
    throw Error("config `" + key + "`: expected a non-negative integer, got `" + v + "`");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double x = std::stod(v, &used);
    if (used != v.size()) throw Error("");
    return x;
  } catch (const std::exception&) {
    throw Error("config `" + key + "`: expected a number, got `" + v + "`");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error("config `" + key + "`: expected true or false, got `" + v + "`");
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "d",           "n_heads",       "n_enc_layers", "n_dec_layers", "slots",        "k",
      "n_k",         "m",             "rpe_buckets",  "rpe_max_distance", "ffn_width", "max_input_len",
      "use_kcc",     "epochs",        "stage1_epochs", "inner_epochs", "lambda_null", "lambda_w",
      "lambda_g",    "alpha_w",       "alpha_g",      "batch",        "use_kwp",      "seed",
      "threads",     "max_segment_tokens", "levels",  "mode"};
  return k;
}

void RunConfig::set(const std::string& key, const std::string& v) {
  if (key == "d") model.d = to_size(key, v);
  else if (key == "n_heads") model.n_heads = to_size(key, v);
  else if (key == "n_enc_layers") model.n_enc_layers = to_size(key, v);
  else if (key == "n_dec_layers") model.n_dec_layers = to_size(key, v);
  else if (key == "slots") model.N = to_size(key, v);
  else if (key == "k") model.k = to_size(key, v);
  else if (key == "n_k") model.N_K = to_size(key, v);
  else if (key == "m") model.m = to_size(key, v);
  else if (key == "rpe_buckets") model.rpe_buckets = static_cast<int>(to_size(key, v));
  else if (key == "rpe_max_distance") model.rpe_max_distance = static_cast<int>(to_size(key, v));
  else if (key == "ffn_width") model.ffn_width = to_size(key, v);
  else if (key == "max_input_len") model.max_input_len = to_size(key, v);
  else if (key == "use_kcc") model.use_kcc = to_bool(key, v);
  else if (key == "epochs") tsmt.E = to_size(key, v);
  else if (key == "stage1_epochs") tsmt.E1 = to_size(key, v);
  else if (key == "inner_epochs") tsmt.E2 = to_size(key, v);
  else if (key == "lambda_null") tsmt.lambda_null = to_double(key, v);
  else if (key == "lambda_w") tsmt.lambda_w = to_double(key, v);
  else if (key == "lambda_g") tsmt.lambda_g = to_double(key, v);
  else if (key == "alpha_w") tsmt.alpha_w = to_double(key, v);
  else if (key == "alpha_g") tsmt.alpha_g = to_double(key, v);
  else if (key == "batch") tsmt.batch = to_size(key, v);
  else if (key == "use_kwp") tsmt.use_kwp = to_bool(key, v);
  else if (key == "seed") {
    seed = to_size(key, v);
    tsmt.seed = seed;
  } else if (key == "threads") threads = std::max<std::size_t>(1, to_size(key, v));
  else if (key == "max_segment_tokens") max_segment_tokens = to_size(key, v);
  else if (key == "levels") levels = v;
  else if (key == "mode") mode = v;
  else throw Error("unknown config key `" + key + "`");
}

void RunConfig::apply(const std::map<std::string, std::string>& values) {
  for (const auto& [k, v] : values) set(k, v);
}

void RunConfig::apply_env(const std::function<const char*(const char*)>& getenv) {
  for (const auto& k : keys()) {
    std::string name(kEnvPrefix);
    for (char c : k) name += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (const char* v = getenv(name.c_str())) set(k, v);
  }
}

std::map<std::string, std::string> RunConfig::values() const {
  auto b = [](bool x) { return std::string(x ? "true" : "false"); };
  return {{"d", std::to_string(model.d)},
          {"n_heads", std::to_string(model.n_heads)},
          {"n_enc_layers", std::to_string(model.n_enc_layers)},
          {"n_dec_layers", std::to_string(model.n_dec_layers)},
          {"slots", std::to_string(model.N)},
          {"k", std::to_string(model.k)},
          {"n_k", std::to_string(model.N_K)},
          {"m", std::to_string(model.m)},
          {"rpe_buckets", std::to_string(model.rpe_buckets)},
          {"rpe_max_distance", std::to_string(model.rpe_max_distance)},
          {"ffn_width", std::to_string(model.ffn_width)},
          {"max_input_len", std::to_string(model.max_input_len)},
          {"use_kcc", b(model.use_kcc)},
          {"epochs", std::to_string(tsmt.E)},
          {"stage1_epochs", std::to_string(tsmt.E1)},
          {"inner_epochs", std::to_string(tsmt.E2)},
          {"lambda_null", fmt(tsmt.lambda_null)},
          {"lambda_w", fmt(tsmt.lambda_w)},
          {"lambda_g", fmt(tsmt.lambda_g)},
          {"alpha_w", fmt(tsmt.alpha_w)},
          {"alpha_g", fmt(tsmt.alpha_g)},
          {"batch", std::to_string(tsmt.batch)},
          {"use_kwp", b(tsmt.use_kwp)},
          {"seed", std::to_string(seed)},
          {"threads", std::to_string(threads)},
          {"max_segment_tokens", std::to_string(max_segment_tokens)},
          {"levels", levels},
          {"mode", mode}};
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace kappa
