// Copyright 2026 The p2p Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// Parameterised building blocks. Parameters live in a ParameterStore under
// stable hierarchical names ("decoder.0.cross.q.weight"); layers hold handles.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "p2p/nn/ops.hpp"

namespace p2p::nn {

using Rng = std::mt19937_64;

template <typename T>
Tensor<T> normal_tensor(Shape shape, double stddev, Rng& rng);
template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng);

template <typename T>
class ParameterStore {
 public:
  // Registers a new parameter. Names must be unique.
  Var<T> create(const std::string& name, Tensor<T> init);

  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Var<T>& at(const std::string& name);
  const Var<T>& at(const std::string& name) const;

  // Registration order.
  const std::vector<std::string>& names() const { return names_; }
  std::vector<Var<T>>& vars() { return vars_; }
  const std::vector<Var<T>>& vars() const { return vars_; }
  std::int64_t parameter_count() const;

  void zero_grad();

  // Copies values from another store with identical names and shapes.
  template <typename U>
  void assign_from(const ParameterStore<U>& other);

 private:
  std::vector<std::string> names_;
  std::vector<Var<T>> vars_;
  std::map<std::string, std::size_t> index_;
};

template <typename T>
struct Linear {
  Var<T> weight;  // out x in
  Var<T> bias;    // out, or undefined

  Linear() = default;
  Linear(ParameterStore<T>& store, const std::string& name, std::int64_t in,
         std::int64_t out, Rng& rng, bool with_bias = true);
  Var<T> operator()(const Var<T>& x) const { return linear(x, weight, bias); }
};

template <typename T>
struct LayerNorm {
  Var<T> gamma, beta;

  LayerNorm() = default;
  LayerNorm(ParameterStore<T>& store, const std::string& name, std::int64_t width);
  Var<T> operator()(const Var<T>& x) const { return layer_norm(x, gamma, beta); }
};

template <typename T>
struct Conv2d {
  Var<T> weight;  // out x (k*k*in)
  Var<T> bias;
  std::int64_t kernel = 3, stride = 1, pad = 1;

  Conv2d() = default;
  Conv2d(ParameterStore<T>& store, const std::string& name, std::int64_t in,
         std::int64_t out, std::int64_t kernel, std::int64_t stride, Rng& rng);
  Var<T> operator()(const Var<T>& x) const {
    return conv2d(x, weight, bias, kernel, stride, pad);
  }
};

template <typename T>
struct MultiHeadAttention {
  Linear<T> q, k, v, out;
  std::int64_t heads = 1;

  MultiHeadAttention() = default;
  MultiHeadAttention(ParameterStore<T>& store, const std::string& name,
                     std::int64_t width, std::int64_t heads, Rng& rng);
  Var<T> operator()(const Var<T>& query, const Var<T>& key, const Var<T>& value,
                    Tensor<T>* probs = nullptr) const;
};

template <typename T>
struct FeedForward {
  Linear<T> fc1, fc2;

  FeedForward() = default;
  FeedForward(ParameterStore<T>& store, const std::string& name, std::int64_t in,
              std::int64_t hidden, std::int64_t out, Rng& rng);
  Var<T> operator()(const Var<T>& x) const { return fc2(relu(fc1(x))); }
};

template <typename T>
template <typename U>
void ParameterStore<T>::assign_from(const ParameterStore<U>& other) {
  if (other.names() != names_) {
    throw Error(ErrorCode::kShape, "parameter stores have different layouts");
  }
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    const Tensor<U>& src = other.vars()[i].value();
    if (src.shape() != vars_[i].shape()) {
      throw Error(ErrorCode::kShape, "parameter " + names_[i] + " shape mismatch");
    }
    vars_[i].mutable_value() = src.template cast<T>();
  }
}

}  // namespace p2p::nn
