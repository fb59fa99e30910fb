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
#include "p2p/nn/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <vector>

namespace p2p::nn::kernels {

namespace {

// Work (in multiply-adds) below which a kernel stays on the calling thread.
constexpr std::int64_t kParallelWork = 1 << 15;

template <typename T>
struct Tile {
  static constexpr int kRows = 6;
  // Two 512-bit vectors per accumulator row.
  static constexpr int kCols = static_cast<int>(128 / sizeof(T));
};

template <typename T>
inline T element(const T* x, std::int64_t ld, Trans t, std::int64_t r, std::int64_t c) {
  return t == Trans::kNo ? x[r * ld + c] : x[c * ld + r];
}

template <typename T>
void pack_b(Trans tb, const T* b, std::int64_t ldb, std::int64_t n, std::int64_t k,
            T* packed) {
  constexpr int nr = Tile<T>::kCols;
  const std::int64_t panels = (n + nr - 1) / nr;
#pragma omp parallel for schedule(static) if (n * k > kParallelWork)
  for (std::int64_t p = 0; p < panels; ++p) {
    T* dst = packed + p * nr * k;
    const std::int64_t j0 = p * nr;
    const std::int64_t cols = std::min<std::int64_t>(nr, n - j0);
    for (std::int64_t kk = 0; kk < k; ++kk) {
      T* row = dst + kk * nr;
      if (tb == Trans::kNo) {
        const T* src = b + kk * ldb + j0;
        for (std::int64_t j = 0; j < cols; ++j) row[j] = src[j];
      } else {
        for (std::int64_t j = 0; j < cols; ++j) row[j] = b[(j0 + j) * ldb + kk];
      }
      for (std::int64_t j = cols; j < nr; ++j) row[j] = T(0);
    }
  }
}

template <typename T>
void pack_a(Trans ta, const T* a, std::int64_t lda, std::int64_t i0, std::int64_t rows,
            std::int64_t k, T* packed) {
  constexpr int mr = Tile<T>::kRows;
  for (std::int64_t kk = 0; kk < k; ++kk) {
    T* dst = packed + kk * mr;
    for (std::int64_t i = 0; i < rows; ++i) dst[i] = element(a, lda, ta, i0 + i, kk);
    for (std::int64_t i = rows; i < mr; ++i) dst[i] = T(0);
  }
}

template <typename T>
inline void micro_kernel(std::int64_t k, const T* __restrict ap, const T* __restrict bp,
                         T alpha, T beta, T* __restrict c, std::int64_t ldc, std::int64_t rows,
                         std::int64_t cols) {
  constexpr int mr = Tile<T>::kRows;
  constexpr int nr = Tile<T>::kCols;
  T acc[mr][nr] = {};
  for (std::int64_t kk = 0; kk < k; ++kk) {
    const T* bk = bp + kk * nr;
    const T* ak = ap + kk * mr;
    for (int i = 0; i < mr; ++i) {
      const T av = ak[i];
#pragma omp simd
      for (int j = 0; j < nr; ++j) acc[i][j] += av * bk[j];
    }
  }
  for (std::int64_t i = 0; i < rows; ++i) {
    T* crow = c + i * ldc;
    if (beta == T(0)) {
      for (std::int64_t j = 0; j < cols; ++j) crow[j] = alpha * acc[i][j];
    } else {
      for (std::int64_t j = 0; j < cols; ++j) crow[j] = beta * crow[j] + alpha * acc[i][j];
    }
  }
}

}  // namespace

template <typename T>
void gemm(Trans ta, Trans tb, std::int64_t m, std::int64_t n, std::int64_t k, T alpha,
          const T* a, std::int64_t lda, const T* b, std::int64_t ldb, T beta, T* c,
          std::int64_t ldc) {
  if (m <= 0 || n <= 0) return;
  if (k <= 0) {
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < n; ++j)
        c[i * ldc + j] = beta == T(0) ? T(0) : beta * c[i * ldc + j];
    return;
  }
  constexpr int mr = Tile<T>::kRows;
  constexpr int nr = Tile<T>::kCols;
  const std::int64_t panels = (n + nr - 1) / nr;
  std::vector<T> packed_b(static_cast<std::size_t>(panels * nr * k));
  pack_b(tb, b, ldb, n, k, packed_b.data());

  const std::int64_t row_blocks = (m + mr - 1) / mr;
#pragma omp parallel if (m * n * k > kParallelWork)
  {
    std::vector<T> packed_a(static_cast<std::size_t>(mr * k));
#pragma omp for schedule(static)
    for (std::int64_t rb = 0; rb < row_blocks; ++rb) {
      const std::int64_t i0 = rb * mr;
      const std::int64_t rows = std::min<std::int64_t>(mr, m - i0);
      pack_a(ta, a, lda, i0, rows, k, packed_a.data());
      for (std::int64_t p = 0; p < panels; ++p) {
        const std::int64_t j0 = p * nr;
        micro_kernel(k, packed_a.data(), packed_b.data() + p * nr * k, alpha, beta,
                     c + i0 * ldc + j0, ldc, rows, std::min<std::int64_t>(nr, n - j0));
      }
    }
  }
}

template <typename T>
void im2col(const ConvGeometry& g, const T* image, T* cols) {
  const std::int64_t oh = g.out_h(), ow = g.out_w(), patch = g.patch();
  const std::int64_t ch = g.in_c;
#pragma omp parallel for schedule(static) if (oh * ow * patch > kParallelWork)
  for (std::int64_t oy = 0; oy < oh; ++oy) {
    for (std::int64_t ox = 0; ox < ow; ++ox) {
      T* dst = cols + (oy * ow + ox) * patch;
      for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
        const std::int64_t iy = oy * g.stride - g.pad + ky;
        for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
          const std::int64_t ix = ox * g.stride - g.pad + kx;
          T* d = dst + (ky * g.kernel + kx) * ch;
          if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w) {
            std::fill(d, d + ch, T(0));
          } else {
            const T* s = image + (iy * g.in_w + ix) * ch;
            std::copy(s, s + ch, d);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const ConvGeometry& g, const T* cols, T* image) {
  const std::int64_t oh = g.out_h(), ow = g.out_w(), patch = g.patch();
  const std::int64_t ch = g.in_c;
  // Gather form: each input pixel sums the patch entries that read it, in a
  // fixed (ky, kx) order.
#pragma omp parallel for schedule(static) if (oh * ow * patch > kParallelWork)
  for (std::int64_t iy = 0; iy < g.in_h; ++iy) {
    for (std::int64_t ix = 0; ix < g.in_w; ++ix) {
      T* dst = image + (iy * g.in_w + ix) * ch;
      for (std::int64_t ky = 0; ky < g.kernel; ++ky) {
        const std::int64_t ny = iy + g.pad - ky;
        if (ny < 0 || ny % g.stride != 0) continue;
        const std::int64_t oy = ny / g.stride;
        if (oy >= oh) continue;
        for (std::int64_t kx = 0; kx < g.kernel; ++kx) {
          const std::int64_t nx = ix + g.pad - kx;
          if (nx < 0 || nx % g.stride != 0) continue;
          const std::int64_t ox = nx / g.stride;
          if (ox >= ow) continue;
          const T* src = cols + (oy * ow + ox) * patch + (ky * g.kernel + kx) * ch;
#pragma omp simd
          for (std::int64_t c = 0; c < ch; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

namespace {

struct BilinearTaps {
  bool valid = false;
  std::int64_t y0 = 0, y1 = 0, x0 = 0, x1 = 0;
  double w00 = 0, w01 = 0, w10 = 0, w11 = 0;
};

BilinearTaps bilinear_taps(double y, double x, std::int64_t h, std::int64_t w) {
  BilinearTaps t;
  if (y < -1.0 || y > static_cast<double>(h) || x < -1.0 || x > static_cast<double>(w)) {
    return t;
  }
  t.valid = true;
  y = std::max(y, 0.0);
  x = std::max(x, 0.0);
  t.y0 = static_cast<std::int64_t>(y);
  t.x0 = static_cast<std::int64_t>(x);
  if (t.y0 >= h - 1) {
    t.y0 = t.y1 = h - 1;
    y = static_cast<double>(t.y0);
  } else {
    t.y1 = t.y0 + 1;
  }
  if (t.x0 >= w - 1) {
    t.x0 = t.x1 = w - 1;
    x = static_cast<double>(t.x0);
  } else {
    t.x1 = t.x0 + 1;
  }
  const double ly = y - static_cast<double>(t.y0), lx = x - static_cast<double>(t.x0);
  const double hy = 1.0 - ly, hx = 1.0 - lx;
  t.w00 = hy * hx;
  t.w01 = hy * lx;
  t.w10 = ly * hx;
  t.w11 = ly * lx;
  return t;
}

BilinearTaps bin_taps(const FeatureBox& box, std::int64_t size, std::int64_t i,
                      std::int64_t j, std::int64_t h, std::int64_t w) {
  const double bh = (box.y1 - box.y0) / static_cast<double>(size);
  const double bw = (box.x1 - box.x0) / static_cast<double>(size);
  const double y = box.y0 + (static_cast<double>(i) + 0.5) * bh;
  const double x = box.x0 + (static_cast<double>(j) + 0.5) * bw;
  return bilinear_taps(y, x, h, w);
}

}  // namespace

template <typename T>
void roi_align(const T* feature, std::int64_t h, std::int64_t w, std::int64_t c,
               const FeatureBox& box, std::int64_t size, T* out) {
#pragma omp parallel for schedule(static) if (size * size * c > kParallelWork)
  for (std::int64_t i = 0; i < size; ++i) {
    for (std::int64_t j = 0; j < size; ++j) {
      T* dst = out + (i * size + j) * c;
      const BilinearTaps t = bin_taps(box, size, i, j, h, w);
      if (!t.valid) {
        std::fill(dst, dst + c, T(0));
        continue;
      }
      const T* f00 = feature + (t.y0 * w + t.x0) * c;
      const T* f01 = feature + (t.y0 * w + t.x1) * c;
      const T* f10 = feature + (t.y1 * w + t.x0) * c;
      const T* f11 = feature + (t.y1 * w + t.x1) * c;
      const T w00 = static_cast<T>(t.w00), w01 = static_cast<T>(t.w01);
      const T w10 = static_cast<T>(t.w10), w11 = static_cast<T>(t.w11);
#pragma omp simd
      for (std::int64_t ch = 0; ch < c; ++ch) {
        dst[ch] = w00 * f00[ch] + w01 * f01[ch] + w10 * f10[ch] + w11 * f11[ch];
      }
    }
  }
}

template <typename T>
void roi_align_backward(const T* grad_out, std::int64_t h, std::int64_t w, std::int64_t c,
                        const FeatureBox& box, std::int64_t size, T* grad_feature) {
  // Bins overlap in their taps, so threads split the channel axis instead.
  constexpr std::int64_t kChunk = 16;
  const std::int64_t chunks = (c + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static) if (size * size * c > kParallelWork)
  for (std::int64_t cb = 0; cb < chunks; ++cb) {
    const std::int64_t c0 = cb * kChunk;
    const std::int64_t c1 = std::min(c, c0 + kChunk);
    for (std::int64_t i = 0; i < size; ++i) {
      for (std::int64_t j = 0; j < size; ++j) {
        const BilinearTaps t = bin_taps(box, size, i, j, h, w);
        if (!t.valid) continue;
        const T* g = grad_out + (i * size + j) * c;
        T* f00 = grad_feature + (t.y0 * w + t.x0) * c;
        T* f01 = grad_feature + (t.y0 * w + t.x1) * c;
        T* f10 = grad_feature + (t.y1 * w + t.x0) * c;
        T* f11 = grad_feature + (t.y1 * w + t.x1) * c;
        for (std::int64_t ch = c0; ch < c1; ++ch) {
          f00[ch] += static_cast<T>(t.w00) * g[ch];
          f01[ch] += static_cast<T>(t.w01) * g[ch];
          f10[ch] += static_cast<T>(t.w10) * g[ch];
          f11[ch] += static_cast<T>(t.w11) * g[ch];
        }
      }
    }
  }
}

template <>
void exp_inplace<float>(float* x, std::int64_t n) {
  // Cephes-style range reduction e^x = 2^k * e^r, |r| <= ln2/2, written so
  // that the loop vectorises.
#pragma omp simd
  for (std::int64_t i = 0; i < n; ++i) {
    float v = x[i] < -87.3f ? -87.3f : x[i];
    v = v > 88.7f ? 88.7f : v;
    // Truncation of a positive value is floor(); the offset keeps it positive.
    const float k =
        static_cast<float>(static_cast<std::int32_t>(v * 1.44269504088896341f + 128.5f)) - 128.0f;
    const float r = v - k * 0.693359375f + k * 2.12194440e-4f;
    float p = 1.9875691500e-4f;
    p = p * r + 1.3981999507e-3f;
    p = p * r + 8.3334519073e-3f;
    p = p * r + 4.1665795894e-2f;
    p = p * r + 1.6666665459e-1f;
    p = p * r + 5.0000001201e-1f;
    const float e = p * r * r + r + 1.0f;
    const std::int32_t bits = (static_cast<std::int32_t>(k) + 127) << 23;
    x[i] = e * std::bit_cast<float>(bits);
  }
}

template <>
void exp_inplace<double>(double* x, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) x[i] = std::exp(x[i]);
}

template <typename T>
void attention(const T* q, const T* k, const T* v, std::int64_t nq, std::int64_t nk,
               std::int64_t c, std::int64_t heads, T* out, T* probs) {
  const std::int64_t d = c / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  for (std::int64_t h = 0; h < heads; ++h) {
    T* p = probs + h * nq * nk;
    gemm(Trans::kNo, Trans::kYes, nq, nk, d, scale, q + h * d, c, k + h * d, c, T(0), p, nk);
#pragma omp parallel for schedule(static) if (nq * nk > kParallelWork)
    for (std::int64_t i = 0; i < nq; ++i) {
      T* row = p + i * nk;
      T mx = row[0];
      for (std::int64_t j = 1; j < nk; ++j) mx = std::max(mx, row[j]);
      for (std::int64_t j = 0; j < nk; ++j) row[j] -= mx;
      exp_inplace(row, nk);
      T sum = 0;
      for (std::int64_t j = 0; j < nk; ++j) sum += row[j];
      const T inv = T(1) / sum;
      for (std::int64_t j = 0; j < nk; ++j) row[j] *= inv;
    }
    gemm(Trans::kNo, Trans::kNo, nq, d, nk, T(1), p, nk, v + h * d, c, T(0), out + h * d, c);
  }
}

template <typename T>
void attention_backward(const T* q, const T* k, const T* v, const T* probs, const T* dout,
                        std::int64_t nq, std::int64_t nk, std::int64_t c, std::int64_t heads,
                        T* dq, T* dk, T* dv) {
  const std::int64_t d = c / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(d));
  std::vector<T> ds(static_cast<std::size_t>(nq * nk));
  for (std::int64_t h = 0; h < heads; ++h) {
    const T* p = probs + h * nq * nk;
    gemm(Trans::kYes, Trans::kNo, nk, d, nq, T(1), p, nk, dout + h * d, c, T(1), dv + h * d, c);
    gemm(Trans::kNo, Trans::kYes, nq, nk, d, T(1), dout + h * d, c, v + h * d, c, T(0),
         ds.data(), nk);
#pragma omp parallel for schedule(static) if (nq * nk > kParallelWork)
    for (std::int64_t i = 0; i < nq; ++i) {
      T* row = ds.data() + i * nk;
      const T* prow = p + i * nk;
      T dot = 0;
      for (std::int64_t j = 0; j < nk; ++j) dot += row[j] * prow[j];
      for (std::int64_t j = 0; j < nk; ++j) row[j] = prow[j] * (row[j] - dot);
    }
    gemm(Trans::kNo, Trans::kNo, nq, d, nk, scale, ds.data(), nk, k + h * d, c, T(1),
         dq + h * d, c);
    gemm(Trans::kYes, Trans::kNo, nk, d, nq, scale, ds.data(), nk, q + h * d, c, T(1),
         dk + h * d, c);
  }
}

template <typename T>
void layer_norm(const T* x, const T* gamma, const T* beta, std::int64_t rows,
                std::int64_t cols, T eps, T* y, T* mean, T* rstd) {
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * cols;
    T mu = 0;
    for (std::int64_t j = 0; j < cols; ++j) mu += xr[j];
    mu /= static_cast<T>(cols);
    T var = 0;
    for (std::int64_t j = 0; j < cols; ++j) var += (xr[j] - mu) * (xr[j] - mu);
    var /= static_cast<T>(cols);
    const T rs = T(1) / std::sqrt(var + eps);
    mean[r] = mu;
    rstd[r] = rs;
    T* yr = y + r * cols;
    for (std::int64_t j = 0; j < cols; ++j) yr[j] = (xr[j] - mu) * rs * gamma[j] + beta[j];
  }
}

template <typename T>
void layer_norm_backward(const T* x, const T* gamma, const T* mean, const T* rstd,
                         const T* dy, std::int64_t rows, std::int64_t cols, T* dx,
                         T* dgamma, T* dbeta) {
  if (dx != nullptr) {
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
    for (std::int64_t r = 0; r < rows; ++r) {
      const T* xr = x + r * cols;
      const T* gr = dy + r * cols;
      T sum_g = 0, sum_gx = 0;
      for (std::int64_t j = 0; j < cols; ++j) {
        const T xhat = (xr[j] - mean[r]) * rstd[r];
        const T g = gr[j] * gamma[j];
        sum_g += g;
        sum_gx += g * xhat;
      }
      const T inv_n = T(1) / static_cast<T>(cols);
      T* dr = dx + r * cols;
      for (std::int64_t j = 0; j < cols; ++j) {
        const T xhat = (xr[j] - mean[r]) * rstd[r];
        const T g = gr[j] * gamma[j];
        dr[j] += rstd[r] * (g - inv_n * sum_g - xhat * inv_n * sum_gx);
      }
    }
  }
  if (dgamma != nullptr || dbeta != nullptr) {
#pragma omp parallel for schedule(static) if (rows * cols > kParallelWork)
    for (std::int64_t j = 0; j < cols; ++j) {
      T sg = 0, sb = 0;
      for (std::int64_t r = 0; r < rows; ++r) {
        const T xhat = (x[r * cols + j] - mean[r]) * rstd[r];
        sg += dy[r * cols + j] * xhat;
        sb += dy[r * cols + j];
      }
      if (dgamma != nullptr) dgamma[j] += sg;
      if (dbeta != nullptr) dbeta[j] += sb;
    }
  }
}

template <typename T>
void column_sum(const T* x, std::int64_t rows, std::int64_t cols, T* out) {
  // Row-major sweep with a private accumulator row keeps the summation order
  // over rows fixed.
  std::vector<T> acc(static_cast<std::size_t>(cols), T(0));
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * cols;
#pragma omp simd
    for (std::int64_t j = 0; j < cols; ++j) acc[j] += xr[j];
  }
  for (std::int64_t j = 0; j < cols; ++j) out[j] += acc[j];
}

#define P2P_INSTANTIATE_KERNELS(T)                                                         \
  template void gemm<T>(Trans, Trans, std::int64_t, std::int64_t, std::int64_t, T,         \
                        const T*, std::int64_t, const T*, std::int64_t, T, T*,             \
                        std::int64_t);                                                     \
  template void im2col<T>(const ConvGeometry&, const T*, T*);                              \
  template void col2im<T>(const ConvGeometry&, const T*, T*);                              \
  template void roi_align<T>(const T*, std::int64_t, std::int64_t, std::int64_t,           \
                             const FeatureBox&, std::int64_t, T*);                         \
  template void roi_align_backward<T>(const T*, std::int64_t, std::int64_t, std::int64_t,  \
                                      const FeatureBox&, std::int64_t, T*);                \
  template void attention<T>(const T*, const T*, const T*, std::int64_t, std::int64_t,     \
                             std::int64_t, std::int64_t, T*, T*);                          \
  template void attention_backward<T>(const T*, const T*, const T*, const T*, const T*,    \
                                      std::int64_t, std::int64_t, std::int64_t,            \
                                      std::int64_t, T*, T*, T*);                           \
  template void layer_norm<T>(const T*, const T*, const T*, std::int64_t, std::int64_t, T, \
                              T*, T*, T*);                                                 \
  template void layer_norm_backward<T>(const T*, const T*, const T*, const T*, const T*,   \
                                       std::int64_t, std::int64_t, T*, T*, T*);            \
  template void column_sum<T>(const T*, std::int64_t, std::int64_t, T*);

P2P_INSTANTIATE_KERNELS(float)
P2P_INSTANTIATE_KERNELS(double)

#undef P2P_INSTANTIATE_KERNELS

}  // namespace p2p::nn::kernels
