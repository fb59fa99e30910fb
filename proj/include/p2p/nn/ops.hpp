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

// Differentiable operations. Matrices are rank-2 row-major (rows x cols);
// images and feature maps are rank-3 HWC.

#include <span>
#include <vector>

#include "p2p/nn/autograd.hpp"
#include "p2p/nn/kernels.hpp"

namespace p2p::nn {

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b, Trans ta = Trans::kNo,
              Trans tb = Trans::kNo);

// x (rows x in) * weight^T (weight is out x in) + bias (out). bias may be
// undefined.
template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias);

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T>
Var<T> scale(const Var<T>& a, T s);

template <typename T>
Var<T> operator+(const Var<T>& a, const Var<T>& b) {
  return add(a, b);
}

template <typename T>
Var<T> relu(const Var<T>& x);
template <typename T>
Var<T> sigmoid(const Var<T>& x);

// Normalises each row over the last axis.
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta,
                  T eps = T(1e-5));

template <typename T>
Var<T> concat_cols(const Var<T>& a, const Var<T>& b);

// Each row repeated `times` times consecutively: row i -> rows [i*times, (i+1)*times).
template <typename T>
Var<T> repeat_rows(const Var<T>& x, std::int64_t times);

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);

// x: H x W x Cin, weight: Cout x (k*k*Cin) in (ky, kx, c) order, bias: Cout.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias,
              std::int64_t kernel, std::int64_t stride, std::int64_t pad);

// Nearest-neighbour 2x upsampling cropped to out_h x out_w.
template <typename T>
Var<T> upsample2x(const Var<T>& x, std::int64_t out_h, std::int64_t out_w);

// feature: H x W x C; returns size x size x C.
template <typename T>
Var<T> roi_align(const Var<T>& feature, const FeatureBox& box, std::int64_t size);

// Multi-head scaled dot-product attention on already-projected q, k, v.
// When probs_out is given it receives the heads x nq x nk attention weights.
template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v,
                 std::int64_t heads, Tensor<T>* probs_out = nullptr);

// Sum over rows r with weights[r] != 0 of weights[r] * CE(softmax(logits[r]),
// labels[r]). Returns a one-element tensor.
template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels,
                             std::span<const T> weights);

// Sum over rows of weights[r] * sum_c |pred[r, c] - target[r, c]|.
template <typename T>
Var<T> weighted_l1(const Var<T>& pred, const Tensor<T>& target,
                   std::span<const T> weights);

template <typename T>
Var<T> sum(const Var<T>& x);

// sum_i coeffs[i] * terms[i] over one-element terms.
template <typename T>
Var<T> weighted_sum(const std::vector<Var<T>>& terms, const std::vector<T>& coeffs);

}  // namespace p2p::nn
