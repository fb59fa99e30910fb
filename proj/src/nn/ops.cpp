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
#include "p2p/nn/ops.hpp"

#include <cmath>
#include <memory>
#include <string>

namespace p2p::nn {

namespace {

template <typename T>
void require_rank(const Var<T>& x, std::size_t rank, const char* op) {
  if (!x.defined() || x.value().rank() != rank) {
    throw Error(ErrorCode::kShape, std::string(op) + " expects a rank-" +
                                       std::to_string(rank) + " input, got " +
                                       (x.defined() ? shape_string(x.shape()) : "undefined"));
  }
}

template <typename T>
void require_same_shape(const Var<T>& a, const Var<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::kShape, std::string(op) + ": " + shape_string(a.shape()) + " vs " +
                                       shape_string(b.shape()));
  }
}

template <typename T>
void accumulate(Tensor<T>* dst, const Tensor<T>& src, T factor = T(1)) {
  if (dst == nullptr) return;
  T* d = dst->data();
  const T* s = src.data();
  const std::int64_t n = src.size();
#pragma omp simd
  for (std::int64_t i = 0; i < n; ++i) d[i] += factor * s[i];
}

}  // namespace

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b, Trans ta, Trans tb) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::int64_t lda = a.dim(1), ldb = b.dim(1);
  const std::int64_t m = ta == Trans::kNo ? a.dim(0) : a.dim(1);
  const std::int64_t k = ta == Trans::kNo ? a.dim(1) : a.dim(0);
  const std::int64_t kb = tb == Trans::kNo ? b.dim(0) : b.dim(1);
  const std::int64_t n = tb == Trans::kNo ? b.dim(1) : b.dim(0);
  if (k != kb) {
    throw Error(ErrorCode::kShape, "matmul inner dimensions " + std::to_string(k) + " and " +
                                       std::to_string(kb) + " differ");
  }
  Tensor<T> out({m, n});
  kernels::gemm(ta, tb, m, n, k, T(1), a.value().data(), lda, b.value().data(), ldb, T(0),
                out.data(), n);
  return make_result<T>(std::move(out), {a, b}, [=](Node<T>& node) {
    const T* g = node.grad.data();
    const T* av = parent_value(node, 0).data();
    const T* bv = parent_value(node, 1).data();
    if (Tensor<T>* da = parent_grad(node, 0)) {
      const Trans tbt = tb == Trans::kNo ? Trans::kYes : Trans::kNo;
      if (ta == Trans::kNo) {
        kernels::gemm(Trans::kNo, tbt, m, k, n, T(1), g, n, bv, ldb, T(1), da->data(), k);
      } else {
        kernels::gemm(tb, Trans::kYes, k, m, n, T(1), bv, ldb, g, n, T(1), da->data(), m);
      }
    }
    if (Tensor<T>* db = parent_grad(node, 1)) {
      const Trans tat = ta == Trans::kNo ? Trans::kYes : Trans::kNo;
      if (tb == Trans::kNo) {
        kernels::gemm(tat, Trans::kNo, k, n, m, T(1), av, lda, g, n, T(1), db->data(), n);
      } else {
        kernels::gemm(Trans::kYes, ta, n, k, m, T(1), g, n, av, lda, T(1), db->data(), k);
      }
    }
  });
}

template <typename T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  require_rank(x, 2, "linear");
  require_rank(weight, 2, "linear weight");
  const std::int64_t rows = x.dim(0), in = x.dim(1), out_f = weight.dim(0);
  if (weight.dim(1) != in) {
    throw Error(ErrorCode::kShape, "linear: input width " + std::to_string(in) +
                                       " but weight is " + shape_string(weight.shape()));
  }
  if (bias.defined() && bias.value().size() != out_f) {
    throw Error(ErrorCode::kShape, "linear: bias size mismatch");
  }
  Tensor<T> out({rows, out_f});
  kernels::gemm(Trans::kNo, Trans::kYes, rows, out_f, in, T(1), x.value().data(), in,
                weight.value().data(), in, T(0), out.data(), out_f);
  if (bias.defined()) {
    const T* b = bias.value().data();
    T* o = out.data();
    for (std::int64_t r = 0; r < rows; ++r) {
#pragma omp simd
      for (std::int64_t j = 0; j < out_f; ++j) o[r * out_f + j] += b[j];
    }
  }
  return make_result<T>(std::move(out), {x, weight, bias}, [=](Node<T>& node) {
    const T* g = node.grad.data();
    if (Tensor<T>* dx = parent_grad(node, 0)) {
      kernels::gemm(Trans::kNo, Trans::kNo, rows, in, out_f, T(1), g, out_f,
                    parent_value(node, 1).data(), in, T(1), dx->data(), in);
    }
    if (Tensor<T>* dw = parent_grad(node, 1)) {
      kernels::gemm(Trans::kYes, Trans::kNo, out_f, in, rows, T(1), g, out_f,
                    parent_value(node, 0).data(), in, T(1), dw->data(), in);
    }
    if (node.parents.size() > 2 && node.parents[2]) {
      if (Tensor<T>* db = parent_grad(node, 2)) kernels::column_sum(g, rows, out_f, db->data());
    }
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "add");
  Tensor<T> out = a.value();
  const T* bv = b.value().data();
  T* o = out.data();
  const std::int64_t n = out.size();
#pragma omp simd
  for (std::int64_t i = 0; i < n; ++i) o[i] += bv[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& node) {
    accumulate(parent_grad(node, 0), node.grad);
    accumulate(parent_grad(node, 1), node.grad);
  });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  require_same_shape(a, b, "sub");
  Tensor<T> out = a.value();
  const T* bv = b.value().data();
  T* o = out.data();
  const std::int64_t n = out.size();
#pragma omp simd
  for (std::int64_t i = 0; i < n; ++i) o[i] -= bv[i];
  return make_result<T>(std::move(out), {a, b}, [](Node<T>& node) {
    accumulate(parent_grad(node, 0), node.grad);
    accumulate(parent_grad(node, 1), node.grad, T(-1));
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T s) {
  Tensor<T> out = a.value();
  for (T& v : out.values()) v *= s;
  return make_result<T>(std::move(out), {a}, [s](Node<T>& node) {
    accumulate(parent_grad(node, 0), node.grad, s);
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (T& v : out.values()) v = v > T(0) ? v : T(0);
  return make_result<T>(std::move(out), {x}, [](Node<T>& node) {
    Tensor<T>* dx = parent_grad(node, 0);
    if (dx == nullptr) return;
    const T* y = node.value.data();
    const T* g = node.grad.data();
    T* d = dx->data();
    const std::int64_t n = node.value.size();
#pragma omp simd
    for (std::int64_t i = 0; i < n; ++i) d[i] += y[i] > T(0) ? g[i] : T(0);
  });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
  Tensor<T> out = x.value();
  for (T& v : out.values()) v = T(1) / (T(1) + std::exp(-v));
  return make_result<T>(std::move(out), {x}, [](Node<T>& node) {
    Tensor<T>* dx = parent_grad(node, 0);
    if (dx == nullptr) return;
    const T* y = node.value.data();
    const T* g = node.grad.data();
    T* d = dx->data();
    const std::int64_t n = node.value.size();
    for (std::int64_t i = 0; i < n; ++i) d[i] += g[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  require_rank(x, 2, "layer_norm");
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  if (gamma.value().size() != cols || beta.value().size() != cols) {
    throw Error(ErrorCode::kShape, "layer_norm: affine size mismatch");
  }
  Tensor<T> out({rows, cols});
  auto stats = std::make_shared<std::vector<T>>(static_cast<std::size_t>(2 * rows));
  kernels::layer_norm(x.value().data(), gamma.value().data(), beta.value().data(), rows, cols,
                      eps, out.data(), stats->data(), stats->data() + rows);
  return make_result<T>(std::move(out), {x, gamma, beta}, [=](Node<T>& node) {
    Tensor<T>* dx = parent_grad(node, 0);
    Tensor<T>* dg = parent_grad(node, 1);
    Tensor<T>* db = parent_grad(node, 2);
    kernels::layer_norm_backward(parent_value(node, 0).data(), parent_value(node, 1).data(),
                                 stats->data(), stats->data() + rows, node.grad.data(), rows,
                                 cols, dx ? dx->data() : nullptr, dg ? dg->data() : nullptr,
                                 db ? db->data() : nullptr);
  });
}

template <typename T>
Var<T> concat_cols(const Var<T>& a, const Var<T>& b) {
  require_rank(a, 2, "concat_cols");
  require_rank(b, 2, "concat_cols");
  const std::int64_t rows = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  if (b.dim(0) != rows) throw Error(ErrorCode::kShape, "concat_cols: row counts differ");
  Tensor<T> out({rows, ca + cb});
  for (std::int64_t r = 0; r < rows; ++r) {
    std::copy_n(a.value().data() + r * ca, ca, out.data() + r * (ca + cb));
    std::copy_n(b.value().data() + r * cb, cb, out.data() + r * (ca + cb) + ca);
  }
  return make_result<T>(std::move(out), {a, b}, [=](Node<T>& node) {
    const T* g = node.grad.data();
    if (Tensor<T>* da = parent_grad(node, 0)) {
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < ca; ++j) (*da)[r * ca + j] += g[r * (ca + cb) + j];
    }
    if (Tensor<T>* db = parent_grad(node, 1)) {
      for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < cb; ++j) (*db)[r * cb + j] += g[r * (ca + cb) + ca + j];
    }
  });
}

template <typename T>
Var<T> repeat_rows(const Var<T>& x, std::int64_t times) {
  require_rank(x, 2, "repeat_rows");
  const std::int64_t rows = x.dim(0), cols = x.dim(1);
  Tensor<T> out({rows * times, cols});
  for (std::int64_t r = 0; r < rows; ++r)
    for (std::int64_t t = 0; t < times; ++t)
      std::copy_n(x.value().data() + r * cols, cols, out.data() + (r * times + t) * cols);
  return make_result<T>(std::move(out), {x}, [=](Node<T>& node) {
    Tensor<T>* dx = parent_grad(node, 0);
    if (dx == nullptr) return;
    for (std::int64_t r = 0; r < rows; ++r)
      for (std::int64_t t = 0; t < times; ++t)
        for (std::int64_t j = 0; j < cols; ++j)
          (*dx)[r * cols + j] += node.grad[(r * times + t) * cols + j];
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return make_result<T>(std::move(out), {x},
                        [](Node<T>& node) { accumulate(parent_grad(node, 0), node.grad); });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, std::int64_t kernel,
              std::int64_t stride, std::int64_t pad) {
  require_rank(x, 3, "conv2d");
  require_rank(weight, 2, "conv2d weight");
  ConvGeometry g{x.dim(0), x.dim(1), x.dim(2), kernel, stride, pad};
  const std::int64_t out_c = weight.dim(0);
  if (weight.dim(1) != g.patch()) {
    throw Error(ErrorCode::kShape, "conv2d: weight " + shape_string(weight.shape()) +
                                       " does not match patch size " + std::to_string(g.patch()));
  }
  const std::int64_t oh = g.out_h(), ow = g.out_w(), patch = g.patch();
  if (oh <= 0 || ow <= 0) throw Error(ErrorCode::kShape, "conv2d: empty output");
  auto cols = std::make_shared<std::vector<T>>(static_cast<std::size_t>(oh * ow * patch));
  kernels::im2col(g, x.value().data(), cols->data());
  Tensor<T> out({oh, ow, out_c});
  kernels::gemm(Trans::kNo, Trans::kYes, oh * ow, out_c, patch, T(1), cols->data(), patch,
                weight.value().data(), patch, T(0), out.data(), out_c);
  if (bias.defined()) {
    const T* b = bias.value().data();
    for (std::int64_t p = 0; p < oh * ow; ++p)
      for (std::int64_t o = 0; o < out_c; ++o) out[p * out_c + o] += b[o];
  }
  return make_result<T>(std::move(out), {x, weight, bias}, [=](Node<T>& node) {
    const T* gy = node.grad.data();
    if (Tensor<T>* dw = parent_grad(node, 1)) {
      kernels::gemm(Trans::kYes, Trans::kNo, out_c, patch, oh * ow, T(1), gy, out_c,
                    cols->data(), patch, T(1), dw->data(), patch);
    }
    if (node.parents[2]) {
      if (Tensor<T>* db = parent_grad(node, 2)) kernels::column_sum(gy, oh * ow, out_c, db->data());
    }
    if (Tensor<T>* dx = parent_grad(node, 0)) {
      std::vector<T> dcols(static_cast<std::size_t>(oh * ow * patch));
      kernels::gemm(Trans::kNo, Trans::kNo, oh * ow, patch, out_c, T(1), gy, out_c,
                    parent_value(node, 1).data(), patch, T(0), dcols.data(), patch);
      kernels::col2im(g, dcols.data(), dx->data());
    }
  });
}

template <typename T>
Var<T> upsample2x(const Var<T>& x, std::int64_t out_h, std::int64_t out_w) {
  require_rank(x, 3, "upsample2x");
  const std::int64_t h = x.dim(0), w = x.dim(1), c = x.dim(2);
  if ((out_h + 1) / 2 > h || (out_w + 1) / 2 > w) {
    throw Error(ErrorCode::kShape, "upsample2x: target larger than 2x input");
  }
  Tensor<T> out({out_h, out_w, c});
  for (std::int64_t y = 0; y < out_h; ++y)
    for (std::int64_t xx = 0; xx < out_w; ++xx)
      std::copy_n(x.value().data() + ((y / 2) * w + xx / 2) * c, c,
                  out.data() + (y * out_w + xx) * c);
  return make_result<T>(std::move(out), {x}, [=](Node<T>& node) {
    Tensor<T>* dx = parent_grad(node, 0);
    if (dx == nullptr) return;
    for (std::int64_t y = 0; y < out_h; ++y)
      for (std::int64_t xx = 0; xx < out_w; ++xx) {
        T* d = dx->data() + ((y / 2) * w + xx / 2) * c;
        const T* g = node.grad.data() + (y * out_w + xx) * c;
        for (std::int64_t ch = 0; ch < c; ++ch) d[ch] += g[ch];
      }
  });
}

template <typename T>
Var<T> roi_align(const Var<T>& feature, const FeatureBox& box, std::int64_t size) {
  require_rank(feature, 3, "roi_align");
  const std::int64_t h = feature.dim(0), w = feature.dim(1), c = feature.dim(2);
  Tensor<T> out({size, size, c});
  kernels::roi_align(feature.value().data(), h, w, c, box, size, out.data());
  return make_result<T>(std::move(out), {feature}, [=](Node<T>& node) {
    if (Tensor<T>* df = parent_grad(node, 0)) {
      kernels::roi_align_backward(node.grad.data(), h, w, c, box, size, df->data());
    }
  });
}

template <typename T>
Var<T> attention(const Var<T>& q, const Var<T>& k, const Var<T>& v, std::int64_t heads,
                 Tensor<T>* probs_out) {
  require_rank(q, 2, "attention");
  require_same_shape(k, v, "attention k/v");
  const std::int64_t nq = q.dim(0), nk = k.dim(0), c = q.dim(1);
  if (k.dim(1) != c || c % heads != 0) {
    throw Error(ErrorCode::kShape, "attention: width " + std::to_string(c) +
                                       " incompatible with keys " + shape_string(k.shape()) +
                                       " / heads " + std::to_string(heads));
  }
  Tensor<T> out({nq, c});
  auto probs = std::make_shared<Tensor<T>>(Shape{heads, nq, nk});
  kernels::attention(q.value().data(), k.value().data(), v.value().data(), nq, nk, c, heads,
                     out.data(), probs->data());
  if (probs_out != nullptr) *probs_out = *probs;
  return make_result<T>(std::move(out), {q, k, v}, [=](Node<T>& node) {
    Tensor<T>* dq = parent_grad(node, 0);
    Tensor<T>* dk = parent_grad(node, 1);
    Tensor<T>* dv = parent_grad(node, 2);
    Tensor<T> scratch_q, scratch_k, scratch_v;
    if (dq == nullptr) dq = &(scratch_q = Tensor<T>({nq, c}));
    if (dk == nullptr) dk = &(scratch_k = Tensor<T>({nk, c}));
    if (dv == nullptr) dv = &(scratch_v = Tensor<T>({nk, c}));
    kernels::attention_backward(parent_value(node, 0).data(), parent_value(node, 1).data(),
                                parent_value(node, 2).data(), probs->data(), node.grad.data(),
                                nq, nk, c, heads, dq->data(), dk->data(), dv->data());
  });
}

template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::span<const int> labels,
                             std::span<const T> weights) {
  require_rank(logits, 2, "softmax_cross_entropy");
  const std::int64_t rows = logits.dim(0), classes = logits.dim(1);
  if (static_cast<std::int64_t>(labels.size()) != rows ||
      static_cast<std::int64_t>(weights.size()) != rows) {
    throw Error(ErrorCode::kShape, "softmax_cross_entropy: label/weight count mismatch");
  }
  auto probs = std::make_shared<Tensor<T>>(Shape{rows, classes});
  auto lab = std::make_shared<std::vector<int>>(labels.begin(), labels.end());
  auto wts = std::make_shared<std::vector<T>>(weights.begin(), weights.end());
  double total = 0.0;
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* x = logits.value().data() + r * classes;
    T* p = probs->data() + r * classes;
    T mx = x[0];
    for (std::int64_t j = 1; j < classes; ++j) mx = std::max(mx, x[j]);
    T s = 0;
    for (std::int64_t j = 0; j < classes; ++j) s += (p[j] = std::exp(x[j] - mx));
    for (std::int64_t j = 0; j < classes; ++j) p[j] /= s;
    if ((*wts)[r] == T(0)) continue;
    const int y = (*lab)[r];
    if (y < 0 || y >= classes) {
      throw Error(ErrorCode::kLabel, "label " + std::to_string(y) + " outside [0, " +
                                         std::to_string(classes) + ")");
    }
    const double lse = static_cast<double>(mx) + std::log(static_cast<double>(s));
    total += static_cast<double>((*wts)[r]) * (lse - static_cast<double>(x[y]));
  }
  Tensor<T> out({1}, static_cast<T>(total));
  return make_result<T>(std::move(out), {logits}, [=](Node<T>& node) {
    Tensor<T>* dl = parent_grad(node, 0);
    if (dl == nullptr) return;
    const T g = node.grad[0];
    for (std::int64_t r = 0; r < rows; ++r) {
      const T w = (*wts)[r];
      if (w == T(0)) continue;
      const T* p = probs->data() + r * classes;
      T* d = dl->data() + r * classes;
      for (std::int64_t j = 0; j < classes; ++j) d[j] += g * w * p[j];
      d[(*lab)[r]] -= g * w;
    }
  });
}

template <typename T>
Var<T> weighted_l1(const Var<T>& pred, const Tensor<T>& target, std::span<const T> weights) {
  require_rank(pred, 2, "weighted_l1");
  if (pred.shape() != target.shape()) {
    throw Error(ErrorCode::kShape, "weighted_l1: prediction " + shape_string(pred.shape()) +
                                       " vs target " + shape_string(target.shape()));
  }
  const std::int64_t rows = pred.dim(0), cols = pred.dim(1);
  if (static_cast<std::int64_t>(weights.size()) != rows) {
    throw Error(ErrorCode::kShape, "weighted_l1: weight count mismatch");
  }
  auto tgt = std::make_shared<Tensor<T>>(target);
  auto wts = std::make_shared<std::vector<T>>(weights.begin(), weights.end());
  double total = 0.0;
  for (std::int64_t r = 0; r < rows; ++r) {
    if ((*wts)[r] == T(0)) continue;
    double s = 0.0;
    for (std::int64_t j = 0; j < cols; ++j) s += std::abs(double(pred.value()(r, j)) - target(r, j));
    total += static_cast<double>((*wts)[r]) * s;
  }
  Tensor<T> out({1}, static_cast<T>(total));
  return make_result<T>(std::move(out), {pred}, [=](Node<T>& node) {
    Tensor<T>* dp = parent_grad(node, 0);
    if (dp == nullptr) return;
    const T g = node.grad[0];
    const Tensor<T>& p = parent_value(node, 0);
    for (std::int64_t r = 0; r < rows; ++r) {
      const T w = (*wts)[r];
      if (w == T(0)) continue;
      for (std::int64_t j = 0; j < cols; ++j) {
        const T diff = p(r, j) - (*tgt)(r, j);
        const T sign = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
        (*dp)(r, j) += g * w * sign;
      }
    }
  });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  double s = 0.0;
  for (T v : x.value().values()) s += v;
  return make_result<T>(Tensor<T>({1}, static_cast<T>(s)), {x}, [](Node<T>& node) {
    Tensor<T>* dx = parent_grad(node, 0);
    if (dx == nullptr) return;
    const T g = node.grad[0];
    for (T& v : dx->values()) v += g;
  });
}

template <typename T>
Var<T> weighted_sum(const std::vector<Var<T>>& terms, const std::vector<T>& coeffs) {
  if (terms.size() != coeffs.size() || terms.empty()) {
    throw Error(ErrorCode::kShape, "weighted_sum: term/coefficient count mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].value().size() != 1) throw Error(ErrorCode::kShape, "weighted_sum: non-scalar term");
    s += static_cast<double>(coeffs[i]) * static_cast<double>(terms[i].value()[0]);
  }
  Var<T> out(Tensor<T>({1}, static_cast<T>(s)));
  if (!grad_enabled()) return out;
  bool any = false;
  for (const Var<T>& t : terms) any = any || t.requires_grad();
  if (!any) return out;
  auto& node = *out.node();
  node.requires_grad = true;
  for (const Var<T>& t : terms) node.parents.push_back(t.node());
  node.backward = [coeffs](Node<T>& n) {
    for (std::size_t i = 0; i < n.parents.size(); ++i) {
      if (Tensor<T>* d = parent_grad(n, i)) (*d)[0] += coeffs[i] * n.grad[0];
    }
  };
  return out;
}

#define P2P_INSTANTIATE_OPS(T)                                                                \
  template Var<T> matmul<T>(const Var<T>&, const Var<T>&, Trans, Trans);                      \
  template Var<T> linear<T>(const Var<T>&, const Var<T>&, const Var<T>&);                     \
  template Var<T> add<T>(const Var<T>&, const Var<T>&);                                       \
  template Var<T> sub<T>(const Var<T>&, const Var<T>&);                                       \
  template Var<T> scale<T>(const Var<T>&, T);                                                 \
  template Var<T> relu<T>(const Var<T>&);                                                     \
  template Var<T> sigmoid<T>(const Var<T>&);                                                  \
  template Var<T> layer_norm<T>(const Var<T>&, const Var<T>&, const Var<T>&, T);              \
  template Var<T> concat_cols<T>(const Var<T>&, const Var<T>&);                               \
  template Var<T> repeat_rows<T>(const Var<T>&, std::int64_t);                                \
  template Var<T> reshape<T>(const Var<T>&, Shape);                                           \
  template Var<T> conv2d<T>(const Var<T>&, const Var<T>&, const Var<T>&, std::int64_t,        \
                            std::int64_t, std::int64_t);                                      \
  template Var<T> upsample2x<T>(const Var<T>&, std::int64_t, std::int64_t);                   \
  template Var<T> roi_align<T>(const Var<T>&, const FeatureBox&, std::int64_t);               \
  template Var<T> attention<T>(const Var<T>&, const Var<T>&, const Var<T>&, std::int64_t,     \
                               Tensor<T>*);                                                   \
  template Var<T> softmax_cross_entropy<T>(const Var<T>&, std::span<const int>,               \
                                           std::span<const T>);                               \
  template Var<T> weighted_l1<T>(const Var<T>&, const Tensor<T>&, std::span<const T>);        \
  template Var<T> sum<T>(const Var<T>&);                                                      \
  template Var<T> weighted_sum<T>(const std::vector<Var<T>>&, const std::vector<T>&);

P2P_INSTANTIATE_OPS(float)
P2P_INSTANTIATE_OPS(double)

#undef P2P_INSTANTIATE_OPS

}  // namespace p2p::nn
