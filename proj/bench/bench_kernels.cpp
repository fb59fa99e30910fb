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
// Serial reference kernels against the OpenMP kernels on the shapes the model
// actually runs: backbone convolutions, ROI crops and decoder attention.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "p2p/common/parallel.hpp"
#include "p2p/nn/kernels.hpp"

using namespace p2p::nn;

namespace {

std::vector<float> random_vec(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-1.f, 1.f);
  std::vector<float> v(n);
  for (float& x : v) x = d(rng);
  return v;
}

void set_flops(benchmark::State& state, double flops) {
  state.counters["GFLOPS"] =
      benchmark::Counter(flops, benchmark::Counter::kIsIterationInvariantRate,
                         benchmark::Counter::OneK::kIs1000);
  state.counters["GFLOPS"].value /= 1e9;
}

template <bool kParallel>
void BM_Gemm(benchmark::State& state) {
  const std::int64_t m = state.range(0), n = state.range(1), k = state.range(2);
  auto a = random_vec(m * k, 1), b = random_vec(k * n, 2);
  std::vector<float> c(m * n);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::gemm<float>(Trans::kNo, Trans::kYes, m, n, k, 1.f, a.data(), k, b.data(), k, 0.f,
                           c.data(), n);
    } else {
      reference::gemm<float>(Trans::kNo, Trans::kYes, m, n, k, 1.f, a.data(), k, b.data(), k,
                             0.f, c.data(), n);
    }
    benchmark::DoNotOptimize(c.data());
  }
  set_flops(state, 2.0 * m * n * k);
}

template <bool kParallel>
void BM_Conv(benchmark::State& state) {
  ConvGeometry g{state.range(0), state.range(0), state.range(1), 3, state.range(3), 1};
  const std::int64_t out_c = state.range(2);
  auto img = random_vec(g.in_h * g.in_w * g.in_c, 3), w = random_vec(out_c * g.patch(), 4);
  std::vector<float> bias(out_c), cols(g.out_h() * g.out_w() * g.patch()),
      out(g.out_h() * g.out_w() * out_c);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::im2col(g, img.data(), cols.data());
      kernels::gemm<float>(Trans::kNo, Trans::kYes, g.out_h() * g.out_w(), out_c, g.patch(), 1.f,
                           cols.data(), g.patch(), w.data(), g.patch(), 0.f, out.data(), out_c);
    } else {
      reference::conv2d<float>(g, img.data(), w.data(), bias.data(), out_c, out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
  set_flops(state, 2.0 * g.out_h() * g.out_w() * out_c * g.patch());
}

template <bool kParallel>
void BM_RoiAlign(benchmark::State& state) {
  const std::int64_t size = state.range(0), c = 64;
  auto feat = random_vec(32 * 32 * c, 5);
  std::vector<float> out(size * size * c);
  const FeatureBox box{3.2, 4.7, 27.9, 25.1};
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::roi_align<float>(feat.data(), 32, 32, c, box, size, out.data());
    } else {
      reference::roi_align<float>(feat.data(), 32, 32, c, box, size, out.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool kParallel>
void BM_Attention(benchmark::State& state) {
  const std::int64_t nq = state.range(0), nk = state.range(1), c = 64, heads = 4;
  auto q = random_vec(nq * c, 6), k = random_vec(nk * c, 7), v = random_vec(nk * c, 8);
  std::vector<float> out(nq * c), probs(heads * nq * nk);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::attention<float>(q.data(), k.data(), v.data(), nq, nk, c, heads, out.data(),
                                probs.data());
    } else {
      reference::attention<float>(q.data(), k.data(), v.data(), nq, nk, c, heads, out.data(),
                                  probs.data());
    }
    benchmark::DoNotOptimize(out.data());
  }
  set_flops(state, 4.0 * nq * nk * c);
}

template <bool kParallel>
void BM_LayerNorm(benchmark::State& state) {
  const std::int64_t rows = state.range(0), cols = 64;
  auto x = random_vec(rows * cols, 9), gamma = random_vec(cols, 10), beta = random_vec(cols, 11);
  std::vector<float> y(rows * cols), mean(rows), rstd(rows);
  for (auto _ : state) {
    if constexpr (kParallel) {
      kernels::layer_norm<float>(x.data(), gamma.data(), beta.data(), rows, cols, 1e-5f, y.data(),
                                 mean.data(), rstd.data());
    } else {
      reference::layer_norm<float>(x.data(), gamma.data(), beta.data(), rows, cols, 1e-5f,
                                   y.data());
    }
    benchmark::DoNotOptimize(y.data());
  }
}

}  // namespace

BENCHMARK(BM_Gemm<false>)->Name("gemm/reference")->Args({1024, 64, 64})->Args({1024, 64, 576});
BENCHMARK(BM_Gemm<true>)->Name("gemm/omp")->Args({1024, 64, 64})->Args({1024, 64, 576})
    ->Args({512, 512, 512});
BENCHMARK(BM_Conv<false>)->Name("conv3x3/reference")->Args({64, 32, 64, 2})->Args({32, 64, 64, 1});
BENCHMARK(BM_Conv<true>)->Name("conv3x3/omp")->Args({64, 32, 64, 2})->Args({32, 64, 64, 1});
BENCHMARK(BM_RoiAlign<false>)->Name("roi_align/reference")->Arg(32);
BENCHMARK(BM_RoiAlign<true>)->Name("roi_align/omp")->Arg(32);
BENCHMARK(BM_Attention<false>)->Name("attention/reference")->Args({90, 1024});
BENCHMARK(BM_Attention<true>)->Name("attention/omp")->Args({90, 64})->Args({90, 1024});
BENCHMARK(BM_LayerNorm<false>)->Name("layer_norm/reference")->Arg(1024);
BENCHMARK(BM_LayerNorm<true>)->Name("layer_norm/omp")->Arg(1024);

int main(int argc, char** argv) {
  p2p::configure_workers();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
