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
#include "p2p/nn/layers.hpp"

#include <cmath>

namespace p2p::nn {

template <typename T>
Tensor<T> normal_tensor(Shape shape, double stddev, Rng& rng) {
  Tensor<T> t(std::move(shape));
  std::normal_distribution<double> dist(0.0, stddev);
  for (T& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
Tensor<T> uniform_tensor(Shape shape, double bound, Rng& rng) {
  Tensor<T> t(std::move(shape));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (T& v : t.values()) v = static_cast<T>(dist(rng));
  return t;
}

template <typename T>
Var<T> ParameterStore<T>::create(const std::string& name, Tensor<T> init) {
  if (index_.count(name) != 0) {
    throw Error(ErrorCode::kInput, "duplicate parameter name " + name);
  }
  index_[name] = vars_.size();
  names_.push_back(name);
  vars_.push_back(Var<T>::parameter(std::move(init)));
  return vars_.back();
}

template <typename T>
Var<T>& ParameterStore<T>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::kInput, "unknown parameter " + name);
  return vars_[it->second];
}

template <typename T>
const Var<T>& ParameterStore<T>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::kInput, "unknown parameter " + name);
  return vars_[it->second];
}

template <typename T>
std::int64_t ParameterStore<T>::parameter_count() const {
  std::int64_t n = 0;
  for (const Var<T>& v : vars_) n += v.value().size();
  return n;
}

template <typename T>
void ParameterStore<T>::zero_grad() {
  for (Var<T>& v : vars_) v.zero_grad();
}

template <typename T>
Linear<T>::Linear(ParameterStore<T>& store, const std::string& name, std::int64_t in,
                  std::int64_t out, Rng& rng, bool with_bias) {
  const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
  weight = store.create(name + ".weight", uniform_tensor<T>({out, in}, bound, rng));
  if (with_bias) bias = store.create(name + ".bias", Tensor<T>({out}));
}

template <typename T>
LayerNorm<T>::LayerNorm(ParameterStore<T>& store, const std::string& name,
                        std::int64_t width) {
  gamma = store.create(name + ".gamma", Tensor<T>({width}, T(1)));
  beta = store.create(name + ".beta", Tensor<T>({width}));
}

template <typename T>
Conv2d<T>::Conv2d(ParameterStore<T>& store, const std::string& name, std::int64_t in,
                  std::int64_t out, std::int64_t kernel_size, std::int64_t stride_size,
                  Rng& rng)
    : kernel(kernel_size), stride(stride_size), pad(kernel_size / 2) {
  const std::int64_t fan_in = kernel * kernel * in;
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  weight = store.create(name + ".weight", uniform_tensor<T>({out, fan_in}, bound, rng));
  bias = store.create(name + ".bias", Tensor<T>({out}));
}

template <typename T>
MultiHeadAttention<T>::MultiHeadAttention(ParameterStore<T>& store, const std::string& name,
                                          std::int64_t width, std::int64_t num_heads, Rng& rng)
    : q(store, name + ".q", width, width, rng),
      k(store, name + ".k", width, width, rng, false),
      v(store, name + ".v", width, width, rng),
      out(store, name + ".out", width, width, rng),
      heads(num_heads) {
  if (width % heads != 0) {
    throw Error(ErrorCode::kShape, name + ": width " + std::to_string(width) +
                                       " not divisible by " + std::to_string(heads) + " heads");
  }
}

template <typename T>
Var<T> MultiHeadAttention<T>::operator()(const Var<T>& query, const Var<T>& key,
                                         const Var<T>& value, Tensor<T>* probs) const {
  return out(attention(q(query), k(key), v(value), heads, probs));
}

template <typename T>
FeedForward<T>::FeedForward(ParameterStore<T>& store, const std::string& name,
                            std::int64_t in, std::int64_t hidden, std::int64_t out, Rng& rng)
    : fc1(store, name + ".fc1", in, hidden, rng), fc2(store, name + ".fc2", hidden, out, rng) {}

template Tensor<float> normal_tensor<float>(Shape, double, Rng&);
template Tensor<double> normal_tensor<double>(Shape, double, Rng&);
template Tensor<float> uniform_tensor<float>(Shape, double, Rng&);
template Tensor<double> uniform_tensor<double>(Shape, double, Rng&);

template class ParameterStore<float>;
template class ParameterStore<double>;
template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct Conv2d<float>;
template struct Conv2d<double>;
template struct MultiHeadAttention<float>;
template struct MultiHeadAttention<double>;
template struct FeedForward<float>;
template struct FeedForward<double>;

}  // namespace p2p::nn
