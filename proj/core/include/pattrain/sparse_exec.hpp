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

// Pattern-sparse execution on CPU.
//
// Once a plan is frozen the nonzero positions of each layer's F x (C*H*S)
// filter matrix never move, so the CSR structure (row_ptr, col_ind) and the
// row partition into tiles are built once. Every row holds the same number
// of nonzeros because each filter keeps the same number of kernels and each
// kept kernel keeps 4 cells. Converting dense weights is then a gather.

#ifndef PATTRAIN_SPARSE_EXEC_HPP_
#define PATTRAIN_SPARSE_EXEC_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pattrain/layers.hpp"
#include "pattrain/sparsity_plan.hpp"
#include "pattrain/tensor.hpp"

namespace pattrain {

struct TileConfig {
  std::size_t budget_bytes = 32 * 1024;  // per-tile working set of the sparse operand
};

/// Frozen CSR structure of one layer's filter matrix.
struct SparsityIndex {
  int rows = 0;
  int cols = 0;
  int nnz_per_row = 0;
  std::vector<std::int32_t> row_ptr;       // rows + 1
  std::vector<std::int32_t> col_ind;       // nnz, strictly increasing per row
  std::vector<std::int32_t> tile_offsets;  // row boundaries, first 0, last rows

  std::size_t nnz() const { return col_ind.size(); }
  /// Throws IntegrityError on any broken CSR or tiling invariant.
  void validate() const;

  bool operator==(const SparsityIndex&) const = default;
};

/// Row boundaries splitting `rows` into tiles whose sizes differ by at most 1.
std::vector<std::int32_t> make_tile_offsets(int rows, int nnz_per_row, const TileConfig& cfg);

std::shared_ptr<const SparsityIndex> build_index(const SparsityPlan& plan, std::size_t l,
                                                 const TileConfig& tiles = {});

/// CSR values over a shared, immutable index.
class PatternCSR {
 public:
  PatternCSR() = default;
  PatternCSR(std::shared_ptr<const SparsityIndex> index, std::vector<double> values);

  int rows() const { return index_->rows; }
  int cols() const { return index_->cols; }
  std::size_t nnz() const { return values_.size(); }
  const SparsityIndex& index() const { return *index_; }
  const std::shared_ptr<const SparsityIndex>& shared_index() const { return index_; }
  std::span<const std::int32_t> row_ptr() const { return index_->row_ptr; }
  std::span<const std::int32_t> col_ind() const { return index_->col_ind; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

 private:
  std::shared_ptr<const SparsityIndex> index_;
  std::vector<double> values_;
};

// Gathers `dense` at the index positions. Any nonzero outside the index is an
// IntegrityError: it means masking failed somewhere upstream.
PatternCSR convert2csr(std::shared_ptr<const SparsityIndex> index, const Matrix& dense);
PatternCSR convert2csr(std::shared_ptr<const SparsityIndex> index, const Tensor4& weights);

/// Dense matrix with the CSR values scattered back.
Matrix scatter(const PatternCSR& a);

/// a (rows x K) times b (K x M), tile by tile over the index row partition.
Matrix pattern_spmm(const PatternCSR& a, const Matrix& b);
/// a^T (K x rows) times b (rows x M).
Matrix pattern_spmm_transposed(const PatternCSR& a, const Matrix& b);
/// Entries (dy * cols^T) at the index positions only, in CSR order.
std::vector<double> gather_gemm(const SparsityIndex& index, const Matrix& dy, const Matrix& cols);

struct SparseConvMeta {
  int channels = 0;
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  int padding = 0;
  std::span<const double> bias;

  static SparseConvMeta of(const LayerParams& layer);
};

FeatureMap sparse_conv_forward(const FeatureMap& input, const PatternCSR& weights,
                               const SparseConvMeta& meta);
FeatureMap sparse_conv_forward_cols(const Matrix& cols, int batch, const ConvGeometry& geom,
                                    const PatternCSR& weights, const SparseConvMeta& meta);

struct SparseConvGrads {
  FeatureMap delta_in;              // empty when not requested
  std::vector<double> weight_grad;  // CSR-ordered, index positions only
  std::vector<double> bias_grad;
};

SparseConvGrads sparse_conv_backward(const FeatureMap& delta_out, const FeatureMap& input,
                                     const PatternCSR& weights, const SparseConvMeta& meta,
                                     bool need_delta_in = true);
SparseConvGrads sparse_conv_backward_cols(const FeatureMap& delta_out, const Matrix& cols,
                                          const Shape4& input_shape, const PatternCSR& weights,
                                          const SparseConvMeta& meta, bool need_delta_in = true);

/// Scatters CSR-ordered values into a weight-shaped tensor (zeros elsewhere).
Tensor4 scatter_to_tensor(const SparsityIndex& index, std::span<const double> values,
                          const Shape4& shape);

enum class ConvOperator : std::uint8_t { kDenseGemm = 0, kPatternSpmm = 1 };
std::string to_string(ConvOperator op);

struct LayerExec {
  ConvOperator op = ConvOperator::kDenseGemm;
  double sparsity_ratio = 0.0;
  double threshold = 0.0;
};

/// Static per-layer operator choice, decided once when the plan freezes.
struct LayerExecPlan {
  std::vector<LayerExec> layers;
  bool operator==(const LayerExecPlan&) const = default;
};

// PATTERN_SPMM iff the plan is frozen and the layer's zero fraction is at
// least its threshold. `per_layer` overrides `threshold` where given
// (negative entries mean "use the default").
LayerExecPlan make_exec_plan(const SparsityPlan& plan, double threshold,
                             std::span<const double> per_layer = {});

}  // namespace pattrain

#endif  // PATTRAIN_SPARSE_EXEC_HPP_
