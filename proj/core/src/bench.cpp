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

#include "pattrain/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "pattrain/error.hpp"
#include "pattrain/gemm.hpp"

namespace pattrain {

std::shared_ptr<const SparsityIndex> random_uniform_index(int rows, int cols, int nnz_per_row,
                                                          std::uint64_t seed,
                                                          const TileConfig& tiles) {
  if (rows < 1 || cols < 1 || nnz_per_row < 0 || nnz_per_row > cols) {
    throw ConfigError("random_uniform_index: bad extents");
  }
  auto idx = std::make_shared<SparsityIndex>();
  idx->rows = rows;
  idx->cols = cols;
  idx->nnz_per_row = nnz_per_row;
  idx->row_ptr.resize(rows + 1);
  std::mt19937_64 rng(seed);
  std::vector<std::int32_t> all(cols);
  for (int r = 0; r < rows; ++r) {
    std::iota(all.begin(), all.end(), 0);
    // Partial Fisher-Yates: the first nnz entries are a uniform sample.
    for (int i = 0; i < nnz_per_row; ++i) {
      const auto j = i + static_cast<int>(rng() % static_cast<std::uint64_t>(cols - i));
      std::swap(all[i], all[j]);
    }
    std::sort(all.begin(), all.begin() + nnz_per_row);
    idx->col_ind.insert(idx->col_ind.end(), all.begin(), all.begin() + nnz_per_row);
    idx->row_ptr[r + 1] = static_cast<std::int32_t>(idx->col_ind.size());
  }
  idx->tile_offsets = make_tile_offsets(rows, nnz_per_row, tiles);
  idx->validate();
  return idx;
}

namespace {

template <class Fn>
double best_ms(int repeats, Fn&& fn) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

}  // namespace

std::vector<SpmmPoint> run_spmm_sweep(const SpmmSweep& s) {
  if (s.rows < 1 || s.cols < 1 || s.inner < 1 || s.steps < 2 || s.repeats < 1 ||
      !(s.sparsity_from >= 0.0) || !(s.sparsity_to <= 1.0) || s.sparsity_from >= s.sparsity_to) {
    throw ConfigError("bench-spmm: bad sweep parameters");
  }
  std::mt19937_64 rng(s.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix b(s.cols, s.inner);
  for (double& v : b.data()) v = dist(rng);

  std::vector<SpmmPoint> out;
  for (int step = 0; step < s.steps; ++step) {
    SpmmPoint p;
    p.sparsity = s.sparsity_from + (s.sparsity_to - s.sparsity_from) * step / (s.steps - 1);
    p.nnz_per_row = static_cast<int>(std::lround((1.0 - p.sparsity) * s.cols));
    const auto idx = random_uniform_index(s.rows, s.cols, p.nnz_per_row, s.seed + step + 1);
    std::vector<double> values(idx->nnz());
    for (double& v : values) v = dist(rng);
    const PatternCSR a(idx, values);
    const Matrix dense_a = scatter(a);

    Matrix dense_c(s.rows, s.inner);
    p.dense_ms = best_ms(s.repeats, [&] {
      dense_c.fill(0.0);
      naive_gemm(dense_a, b, dense_c);
    });
    Matrix sparse_c;
    p.sparse_ms = best_ms(s.repeats, [&] { sparse_c = pattern_spmm(a, b); });
    p.max_abs_diff = max_abs_diff(dense_c.data(), sparse_c.data());
    out.push_back(p);
  }
  return out;
}

std::string spmm_csv(const std::vector<SpmmPoint>& points) {
  std::string out = "sparsity,nnz_per_row,dense_ms,sparse_ms,speedup,max_abs_diff\n";
  char buf[160];
  for (const SpmmPoint& p : points) {
    std::snprintf(buf, sizeof(buf), "%.4f,%d,%.4f,%.4f,%.4f,%.3g\n", p.sparsity, p.nnz_per_row,
                  p.dense_ms, p.sparse_ms, p.speedup(), p.max_abs_diff);
    out += buf;
  }
  return out;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ShapeError("spearman: need matching samples");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace pattrain
