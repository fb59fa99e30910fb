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
#include <algorithm>
#include <cmath>
#include <vector>

#include "p2p/nn/kernels.hpp"

namespace p2p::nn::reference {

template <typename T>
void gemm(Trans ta, Trans tb, std::int64_t m, std::int64_t n, std::int64_t k, T alpha,
          const T* a, std::int64_t lda, const T* b, std::int64_t ldb, T beta, T* c,
          std::int64_t ldc) {
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      T sum = 0;
      for (std::int64_t p = 0; p < k; ++p) {
        const T av = ta == Trans::kNo ? a[i * lda + p] : a[p * lda + i];
        const T bv = tb == Trans::kNo ? b[p * ldb + j] : b[j * ldb + p];
        sum += av * bv;
      }
      T& dst = c[i * ldc + j];
      dst = (beta == T(0) ? T(0) : beta * dst) + alpha * sum;
    }
  }
}

template <typename T>
void conv2d(const ConvGeometry& g, const T* image, const T* weight, const T* bias,
            std::int64_t out_c, T* out) {
  const std::int64_t oh = g.out_h(), ow = g.out_w();
  for (std::int64_t oy = 0; oy < oh; ++oy) {
    for (std::int64_t ox = 0; ox < ow; ++ox) {
      for (std::int64_t o = 0; o < out_c; ++o) {
        T sum = bias != nullptr ? bias[o] : T(0);
        for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
          for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
            const std::int64_t iy = oy * g.stride - g.pad + ky;
            const std::int64_t ix = ox * g.stride - g.pad + kx;
            if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) continue;
            for (std::int64_t c = 0; c < g.in_c; ++c) {
              sum += weight[o * g.patch() + (ky * g.kernel + kx) * g.in_c + c] *
                     image[(iy * g.in_w + ix) * g.in_c + c];
            }
          }
        }
        out[(oy * ow + ox) * out_c + o] = sum;
      }
    }
  }
}

template <typename T>
void roi_align(const T* feature, std::int64_t h, std::int64_t w, std::int64_t c,
               const FeatureBox& box, std::int64_t size, T* out) {
  auto at = [&](std::int64_t y, std::int64_t x, std::int64_t ch) {
    return feature[(y * w + x) * c + ch];
  };
  for (std::int64_t i = 0; i < size; ++i) {
    for (std::int64_t j = 0; j < size; ++j) {
      double y = box.y0 + (i + 0.5) * (box.y1 - box.y0) / static_cast<double>(size);
      double x = box.x0 + (j + 0.5) * (box.x1 - box.x0) / static_cast<double>(size);
      for (std::int64_t ch = 0; ch < c; ++ch) {
        T v = 0;
        if (!(y < -1.0 || y > h || x < -1.0 || x > w)) {
          const double yc = std::clamp(y, 0.0, static_cast<double>(h - 1));
          const double xc = std::clamp(x, 0.0, static_cast<double>(w - 1));
          const auto y0 = static_cast<std::int64_t>(std::floor(yc));
          const auto x0 = static_cast<std::int64_t>(std::floor(xc));
          const std::int64_t y1 = std::min(y0 + 1, h - 1);
          const std::int64_t x1 = std::min(x0 + 1, w - 1);
          const double ly = yc - y0, lx = xc - x0;
          v = static_cast<T>((1 - ly) * (1 - lx) * at(y0, x0, ch) + (1 - ly) * lx * at(y0, x1, ch) +
                             ly * (1 - lx) * at(y1, x0, ch) + ly * lx * at(y1, x1, ch));
        }
        out[(i * size + j) * c + ch] = v;
      }
    }
  }
}

template <typename T>
void attention(const T* q, const T* k, const T* v, std::int64_t nq, std::int64_t nk,
               std::int64_t c, std::int64_t heads, T* out, T* probs) {
  const std::int64_t d = c / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  std::vector<double> row(static_cast<std::size_t>(nk));
  for (std::int64_t h = 0; h < heads; ++h) {
    for (std::int64_t i = 0; i < nq; ++i) {
      double mx = -1e300;
      for (std::int64_t j = 0; j < nk; ++j) {
        double s = 0;
        for (std::int64_t t = 0; t < d; ++t) s += double(q[i * c + h * d + t]) * k[j * c + h * d + t];
        row[j] = s * scale;
        mx = std::max(mx, row[j]);
      }
      double sum = 0;
      for (std::int64_t j = 0; j < nk; ++j) sum += (row[j] = std::exp(row[j] - mx));
      for (std::int64_t j = 0; j < nk; ++j) probs[(h * nq + i) * nk + j] = static_cast<T>(row[j] / sum);
      for (std::int64_t t = 0; t < d; ++t) {
        double o = 0;
        for (std::int64_t j = 0; j < nk; ++j) o += row[j] / sum * v[j * c + h * d + t];
        out[i * c + h * d + t] = static_cast<T>(o);
      }
    }
  }
}

template <typename T>
void layer_norm(const T* x, const T* gamma, const T* beta, std::int64_t rows,
                std::int64_t cols, T eps, T* y) {
  for (std::int64_t r = 0; r < rows; ++r) {
    double mu = 0, var = 0;
    for (std::int64_t j = 0; j < cols; ++j) mu += x[r * cols + j];
    mu /= cols;
    for (std::int64_t j = 0; j < cols; ++j) var += (x[r * cols + j] - mu) * (x[r * cols + j] - mu);
    var /= cols;
    for (std::int64_t j = 0; j < cols; ++j) {
      y[r * cols + j] = static_cast<T>((x[r * cols + j] - mu) / std::sqrt(var + eps) * gamma[j] + beta[j]);
    }
  }
}

#define P2P_INSTANTIATE_REFERENCE(T)                                                       \
  template void gemm<T>(Trans, Trans, std::int64_t, std::int64_t, std::int64_t, T,         \
                        const T*, std::int64_t, const T*, std::int64_t, T, T*,             \
                        std::int64_t);                                                     \
  template void conv2d<T>(const ConvGeometry&, const T*, const T*, const T*, std::int64_t, \
                          T*);                                                             \
  template void roi_align<T>(const T*, std::int64_t, std::int64_t, std::int64_t,           \
                             const FeatureBox&, std::int64_t, T*);                         \
  template void attention<T>(const T*, const T*, const T*, std::int64_t, std::int64_t,     \
                             std::int64_t, std::int64_t, T*, T*);                          \
  template void layer_norm<T>(const T*, const T*, const T*, std::int64_t, std::int64_t, T, \
                              T*);

P2P_INSTANTIATE_REFERENCE(float)
P2P_INSTANTIATE_REFERENCE(double)

#undef P2P_INSTANTIATE_REFERENCE

}  // namespace p2p::nn::reference
