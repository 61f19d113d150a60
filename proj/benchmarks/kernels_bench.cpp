// Copyright 2026 The pattrain Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Microbenchmarks for the dense and pattern-sparse kernels.

#include <benchmark/benchmark.h>

#include <random>

#include "pattrain/bench.hpp"
#include "pattrain/gemm.hpp"
#include "pattrain/layers.hpp"
#include "pattrain/sparse_exec.hpp"

namespace pattrain {
namespace {

Matrix random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Matrix m(rows, cols);
  for (double& v : m.data()) v = d(rng);
  return m;
}

// Args: M, K, N
void BM_BlasGemm(benchmark::State& state) {
  const Matrix a = random_matrix(state.range(0), state.range(1), 1);
  const Matrix b = random_matrix(state.range(1), state.range(2), 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul(a, b));
  state.counters["GFLOP/s"] = benchmark::Counter(
      2.0 * state.range(0) * state.range(1) * state.range(2), benchmark::Counter::kIsIterationInvariantRate,
      benchmark::Counter::kIs1000);
}
BENCHMARK(BM_BlasGemm)->Args({32, 144, 1024})->Args({128, 1152, 1024});

void BM_NaiveGemm(benchmark::State& state) {
  const Matrix a = random_matrix(state.range(0), state.range(1), 1);
  const Matrix b = random_matrix(state.range(1), state.range(2), 2);
  Matrix c(state.range(0), state.range(2));
  for (auto _ : state) {
    c.fill(0.0);
    naive_gemm(a, b, c);
    benchmark::DoNotOptimize(c.data().data());
  }
}
BENCHMARK(BM_NaiveGemm)->Args({32, 144, 1024})->Args({128, 1152, 1024});

// Args: sparsity in percent; shape 128 x 1152 times 1152 x 1024.
void BM_PatternSpmm(benchmark::State& state) {
  constexpr int kRows = 128;
  constexpr int kCols = 1152;
  const int nnz = static_cast<int>((100 - state.range(0)) * kCols / 100);
  const auto idx = random_uniform_index(kRows, kCols, nnz, 3);
  std::vector<double> values(idx->nnz(), 0.5);
  const PatternCSR a(idx, std::move(values));
  const Matrix b = random_matrix(kCols, 1024, 4);
  for (auto _ : state) benchmark::DoNotOptimize(pattern_spmm(a, b));
  state.counters["nnz/row"] = nnz;
}
BENCHMARK(BM_PatternSpmm)->DenseRange(50, 95, 15)->Arg(99);

void BM_PatternSpmmTransposed(benchmark::State& state) {
  constexpr int kRows = 128;
  constexpr int kCols = 1152;
  const int nnz = static_cast<int>((100 - state.range(0)) * kCols / 100);
  const auto idx = random_uniform_index(kRows, kCols, nnz, 3);
  const PatternCSR a(idx, std::vector<double>(idx->nnz(), 0.5));
  const Matrix d = random_matrix(kRows, 1024, 5);
  for (auto _ : state) benchmark::DoNotOptimize(pattern_spmm_transposed(a, d));
}
BENCHMARK(BM_PatternSpmmTransposed)->Arg(50)->Arg(80)->Arg(95);

void BM_Im2col(benchmark::State& state) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  FeatureMap x(Shape4{static_cast<int>(state.range(0)), 16, 13, 13});
  for (double& v : x.data()) v = d(rng);
  for (auto _ : state) benchmark::DoNotOptimize(im2col(x, 3, 3, 1, 0));
}
BENCHMARK(BM_Im2col)->Arg(1)->Arg(32);

// Second LeNet conv (16 -> 32 channels, 13x13 input), batch 32.
void BM_ConvForwardDense(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  FeatureMap x(Shape4{32, 16, 13, 13});
  for (double& v : x.data()) v = d(rng);
  LayerParams p;
  p.weights = Tensor4(Shape4{32, 16, 3, 3});
  for (double& v : p.weights.data()) v = d(rng);
  p.bias.assign(32, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(conv_forward(x, p));
}
BENCHMARK(BM_ConvForwardDense);

// Same layer with 4-of-9 patterns and `range(0)` percent of kernels removed.
void BM_ConvForwardPattern(benchmark::State& state) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  FeatureMap x(Shape4{32, 16, 13, 13});
  for (double& v : x.data()) v = d(rng);
  const int kept_channels = static_cast<int>(16 * (100 - state.range(0)) / 100);
  const auto idx = random_uniform_index(32, 16 * 9, kept_channels * 4, 8);
  std::vector<double> values(idx->nnz());
  for (double& v : values) v = d(rng);
  const PatternCSR a(idx, std::move(values));
  LayerParams p;
  p.weights = Tensor4(Shape4{32, 16, 3, 3});
  p.bias.assign(32, 0.0);
  const SparseConvMeta meta = SparseConvMeta::of(p);
  for (auto _ : state) benchmark::DoNotOptimize(sparse_conv_forward(x, a, meta));
}
BENCHMARK(BM_ConvForwardPattern)->Arg(0)->Arg(25)->Arg(75);

}  // namespace
}  // namespace pattrain

BENCHMARK_MAIN();
