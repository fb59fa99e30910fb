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
#include "p2p/nn/optim.hpp"

#include <cmath>

namespace p2p::nn {

template <typename T>
AdamW<T>::AdamW(const ParameterStore<T>& params, AdamWConfig cfg) : cfg_(cfg) {
  for (const Var<T>& p : params.vars()) {
    m_.emplace_back(p.shape());
    v_.emplace_back(p.shape());
  }
}

template <typename T>
double AdamW<T>::step(ParameterStore<T>& params, double lr) {
  auto& vars = params.vars();
  if (vars.size() != m_.size()) {
    throw Error(ErrorCode::kShape, "optimizer state does not match parameter store");
  }
  double sq = 0.0;
  for (const Var<T>& p : vars) {
    if (!p.has_grad()) continue;
    for (T g : p.grad().values()) sq += static_cast<double>(g) * g;
  }
  const double norm = std::sqrt(sq);
  if (!std::isfinite(norm)) throw Error(ErrorCode::kNumeric, "non-finite gradient norm");
  const double clip =
      cfg_.clip_norm > 0.0 && norm > cfg_.clip_norm ? cfg_.clip_norm / norm : 1.0;

  ++step_;
  const double b1 = cfg_.beta1, b2 = cfg_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const double decay = 1.0 - lr * cfg_.weight_decay;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    Var<T>& p = vars[i];
    if (!p.has_grad()) continue;
    T* w = p.mutable_value().data();
    const T* g = p.grad().data();
    T* m = m_[i].data();
    T* v = v_[i].data();
    const std::int64_t n = p.value().size();
    for (std::int64_t j = 0; j < n; ++j) {
      const double gj = clip * g[j];
      const double mj = b1 * m[j] + (1.0 - b1) * gj;
      const double vj = b2 * v[j] + (1.0 - b2) * gj * gj;
      m[j] = static_cast<T>(mj);
      v[j] = static_cast<T>(vj);
      const double update = (mj / c1) / (std::sqrt(vj / c2) + cfg_.eps);
      w[j] = static_cast<T>(decay * w[j] - lr * update);
    }
  }
  return norm;
}

template class AdamW<float>;
template class AdamW<double>;

}  // namespace p2p::nn
