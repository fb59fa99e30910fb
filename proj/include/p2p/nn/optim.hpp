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

// AdamW with decoupled weight decay and optional global-norm gradient
// clipping.

#include <cstdint>
#include <vector>

#include "p2p/nn/layers.hpp"

namespace p2p::nn {

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  double clip_norm = 0.0;  // 0 disables clipping
};

template <typename T>
class AdamW {
 public:
  AdamW(const ParameterStore<T>& params, AdamWConfig cfg);

  // One update of every parameter that has a gradient. Returns the global
  // gradient norm before clipping.
  double step(ParameterStore<T>& params, double lr);

  std::int64_t steps() const { return step_; }
  const AdamWConfig& config() const { return cfg_; }

  // First/second moments, index-aligned with the parameter store.
  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  const std::vector<Tensor<T>>& first_moments() const { return m_; }
  const std::vector<Tensor<T>>& second_moments() const { return v_; }
  void set_steps(std::int64_t s) { step_ = s; }

 private:
  AdamWConfig cfg_;
  std::int64_t step_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

}  // namespace p2p::nn
