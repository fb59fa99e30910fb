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

// Compute kernels over raw row-major buffers. The functions in `kernels` are
// OpenMP-parallel; every output element is produced by exactly one thread with
// a fixed accumulation order, so results do not depend on the thread count.
// `reference` holds plain serial versions used by the tests and the benchmark.

#include <cstdint>

namespace p2p::nn {

enum class Trans { kNo, kYes };

// Axis-aligned box in feature-map coordinates (pixel units already scaled).
struct FeatureBox {
  double x0 = 0.0;
  double y0 = 0.0;
  double x1 = 0.0;
  double y1 = 0.0;
};

struct ConvGeometry {
  std::int64_t in_h = 0, in_w = 0, in_c = 0;
  std::int64_t kernel = 3, stride = 1, pad = 1;
  std::int64_t out_h() const { return (in_h + 2 * pad - kernel) / stride + 1; }
  std::int64_t out_w() const { return (in_w + 2 * pad - kernel) / stride + 1; }
  std::int64_t patch() const { return kernel * kernel * in_c; }
};

namespace kernels {

// C = alpha * op(A) * op(B) + beta * C, op(A) is M x K, op(B) is K x N.
// beta == 0 overwrites C without reading it.
template <typename T>
void gemm(Trans ta, Trans tb, std::int64_t m, std::int64_t n, std::int64_t k,
          T alpha, const T* a, std::int64_t lda, const T* b, std::int64_t ldb,
          T beta, T* c, std::int64_t ldc);

// HWC image -> (out_h*out_w) x patch matrix, patch ordered (ky, kx, c).
template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols);
// Scatter-add of a column matrix back onto an HWC gradient image.
template <typename T>
void col2im(const ConvGeometry& g, const T* cols, T* image);

// Bilinear ROI crop with one sample at the centre of each of the size x size
// bins. Samples further than one cell outside the map read zero.
template <typename T>
void roi_align(const T* feature, std::int64_t h, std::int64_t w, std::int64_t c,
               const FeatureBox& box, std::int64_t size, T* out);
template <typename T>
void roi_align_backward(const T* grad_out, std::int64_t h, std::int64_t w,
                        std::int64_t c, const FeatureBox& box, std::int64_t size,
                        T* grad_feature);

// Element-wise exponential in place. The float version is a vectorised
// polynomial accurate to a few ulp.
template <typename T>
void exp_inplace(T* x, std::int64_t n);

// Scaled dot-product attention with heads split along the channel axis.
// q: nq x c, k/v: nk x c, out: nq x c, probs: heads x nq x nk.
template <typename T>
void attention(const T* q, const T* k, const T* v, std::int64_t nq,
               std::int64_t nk, std::int64_t c, std::int64_t heads, T* out,
               T* probs);
// Accumulates into dq, dk, dv.
template <typename T>
void attention_backward(const T* q, const T* k, const T* v, const T* probs,
                        const T* dout, std::int64_t nq, std::int64_t nk,
                        std::int64_t c, std::int64_t heads, T* dq, T* dk, T* dv);

// Row-wise layer normalisation. mean/rstd receive per-row statistics.
template <typename T>
void layer_norm(const T* x, const T* gamma, const T* beta, std::int64_t rows,
                std::int64_t cols, T eps, T* y, T* mean, T* rstd);
// dx is overwritten-accumulated (+=); dgamma/dbeta accumulate.
template <typename T>
void layer_norm_backward(const T* x, const T* gamma, const T* mean,
                         const T* rstd, const T* dy, std::int64_t rows,
                         std::int64_t cols, T* dx, T* dgamma, T* dbeta);

// Column sums of a rows x cols matrix accumulated into out.
template <typename T>
void column_sum(const T* x, std::int64_t rows, std::int64_t cols, T* out);

}  // namespace kernels

namespace reference {

template <typename T>
void gemm(Trans ta, Trans tb, std::int64_t m, std::int64_t n, std::int64_t k,
          T alpha, const T* a, std::int64_t lda, const T* b, std::int64_t ldb,
          T beta, T* c, std::int64_t ldc);

// Direct convolution (no im2col). weight: out_c x (ky, kx, in_c).
template <typename T>
void conv2d(const ConvGeometry& g, const T* image, const T* weight, const T* bias,
            std::int64_t out_c, T* out);

template <typename T>
void roi_align(const T* feature, std::int64_t h, std::int64_t w, std::int64_t c,
               const FeatureBox& box, std::int64_t size, T* out);

template <typename T>
void attention(const T* q, const T* k, const T* v, std::int64_t nq,
               std::int64_t nk, std::int64_t c, std::int64_t heads, T* out,
               T* probs);

template <typename T>
void layer_norm(const T* x, const T* gamma, const T* beta, std::int64_t rows,
                std::int64_t cols, T eps, T* y);

}  // namespace reference

}  // namespace p2p::nn
