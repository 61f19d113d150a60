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

#ifndef PATTRAIN_BENCH_HPP_
#define PATTRAIN_BENCH_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pattrain/sparse_exec.hpp"

namespace pattrain {

struct SpmmSweep {
  int rows = 128;     // filters
  int cols = 1152;    // C * 9
  int inner = 1024;   // output pixels times batch
  double sparsity_from = 0.5;
  double sparsity_to = 1.0;
  int steps = 11;
  int repeats = 3;    // best-of
  std::uint64_t seed = 7;
};

struct SpmmPoint {
  double sparsity = 0.0;  // requested
  int nnz_per_row = 0;
  double dense_ms = 0.0;   // naive dense GEMM
  double sparse_ms = 0.0;  // pattern_spmm
  double max_abs_diff = 0.0;
  double speedup() const { return sparse_ms > 0.0 ? dense_ms / sparse_ms : 0.0; }
};

/// Equal-length-rows index with `nnz_per_row` random columns per row.
std::shared_ptr<const SparsityIndex> random_uniform_index(int rows, int cols, int nnz_per_row,
                                                          std::uint64_t seed,
                                                          const TileConfig& tiles = {});

std::vector<SpmmPoint> run_spmm_sweep(const SpmmSweep& sweep);
std::string spmm_csv(const std::vector<SpmmPoint>& points);

/// Spearman rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pattrain

#endif  // PATTRAIN_BENCH_HPP_
