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

#include "pattrain/sparse_exec.hpp"

#include <algorithm>

#include "pattrain/error.hpp"

namespace pattrain {

namespace {

// Output columns processed per pass so a block of b rows stays cache resident.
constexpr int kColumnBlock = 512;

}  // namespace

void SparsityIndex::validate() const {
  if (rows < 0 || cols < 0) throw IntegrityError("index: negative extent");
  if (row_ptr.size() != static_cast<std::size_t>(rows) + 1 || row_ptr.front() != 0 ||
      row_ptr.back() != static_cast<std::int32_t>(col_ind.size())) {
    throw IntegrityError("index: row_ptr does not frame col_ind");
  }
  for (int r = 0; r < rows; ++r) {
    if (row_ptr[r + 1] - row_ptr[r] != nnz_per_row) {
      throw IntegrityError("index: row " + std::to_string(r) + " has " +
                           std::to_string(row_ptr[r + 1] - row_ptr[r]) + " nonzeros, expected " +
                           std::to_string(nnz_per_row));
    }
    for (std::int32_t i = row_ptr[r]; i < row_ptr[r + 1]; ++i) {
      if (col_ind[i] < 0 || col_ind[i] >= cols) throw IntegrityError("index: column out of range");
      if (i > row_ptr[r] && col_ind[i] <= col_ind[i - 1]) {
        throw IntegrityError("index: columns not strictly increasing in row " + std::to_string(r));
      }
    }
  }
  if (tile_offsets.empty() || tile_offsets.front() != 0 || tile_offsets.back() != rows) {
    throw IntegrityError("index: tile offsets do not cover all rows");
  }
  int lo = rows;
  int hi = 0;
  for (std::size_t t = 1; t < tile_offsets.size(); ++t) {
    const int n = tile_offsets[t] - tile_offsets[t - 1];
    if (n < 0) throw IntegrityError("index: tile offsets decrease");
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  if (rows > 0 && hi - lo > 1) throw IntegrityError("index: tile row counts differ by more than 1");
}

std::vector<std::int32_t> make_tile_offsets(int rows, int nnz_per_row, const TileConfig& cfg) {
  if (rows <= 0) return {0, 0};
  const std::size_t row_bytes =
      static_cast<std::size_t>(std::max(nnz_per_row, 1)) * (sizeof(double) + sizeof(std::int32_t));
  const int rows_per_tile =
      static_cast<int>(std::clamp<std::size_t>(cfg.budget_bytes / row_bytes, 1, rows));
  const int tiles = (rows + rows_per_tile - 1) / rows_per_tile;
  std::vector<std::int32_t> offsets(tiles + 1);
  for (int t = 0; t <= tiles; ++t) {
    offsets[t] = static_cast<std::int32_t>(static_cast<long long>(t) * rows / tiles);
  }
  return offsets;
}

std::shared_ptr<const SparsityIndex> build_index(const SparsityPlan& plan, std::size_t l,
                                                 const TileConfig& tiles) {
  if (!plan.frozen()) throw StateError("build_index needs a frozen plan");
  const LayerPlan& lp = plan.layer(l);
  const int cells = lp.kernel_h * lp.kernel_w;
  auto index = std::make_shared<SparsityIndex>();
  index->rows = lp.filters;
  index->cols = lp.channels * cells;
  index->row_ptr.reserve(lp.filters + 1);
  index->row_ptr.push_back(0);
  for (int f = 0; f < lp.filters; ++f) {
    for (int c = 0; c < lp.channels; ++c) {
      const Pattern p = plan.kept_cells(l, f, c);
      for (int i = 0; i < cells; ++i) {
        if (!lp.planned || p.contains(i)) index->col_ind.push_back(c * cells + i);
      }
    }
    index->row_ptr.push_back(static_cast<std::int32_t>(index->col_ind.size()));
  }
  index->nnz_per_row = lp.filters > 0 ? index->row_ptr[1] : 0;
  index->tile_offsets = make_tile_offsets(index->rows, index->nnz_per_row, tiles);
  index->validate();
  return index;
}

PatternCSR::PatternCSR(std::shared_ptr<const SparsityIndex> index, std::vector<double> values)
    : index_(std::move(index)), values_(std::move(values)) {
  if (!index_) throw StateError("PatternCSR needs an index");
  if (values_.size() != index_->nnz()) throw ShapeError("PatternCSR: value count != nnz");
}

PatternCSR convert2csr(std::shared_ptr<const SparsityIndex> index, const Matrix& dense) {
  if (!index) throw StateError("convert2csr needs an index");
  const SparsityIndex& ix = *index;
  if (dense.rows() != ix.rows || dense.cols() != ix.cols) {
    throw ShapeError("convert2csr: dense matrix does not match index extents");
  }
  std::vector<double> values(ix.nnz());
  for (int r = 0; r < ix.rows; ++r) {
    const auto row = dense.row(r);
    int next = 0;  // first column not yet checked
    for (std::int32_t i = ix.row_ptr[r]; i < ix.row_ptr[r + 1]; ++i) {
      const int col = ix.col_ind[i];
      for (; next < col; ++next) {
        if (row[next] != 0.0) {
          throw IntegrityError("convert2csr: nonzero at (" + std::to_string(r) + "," +
                               std::to_string(next) + ") outside the sparsity index");
        }
      }
      values[i] = row[col];
      next = col + 1;
    }
    for (; next < ix.cols; ++next) {
      if (row[next] != 0.0) {
        throw IntegrityError("convert2csr: nonzero at (" + std::to_string(r) + "," +
                             std::to_string(next) + ") outside the sparsity index");
      }
    }
  }
  return PatternCSR(std::move(index), std::move(values));
}

PatternCSR convert2csr(std::shared_ptr<const SparsityIndex> index, const Tensor4& weights) {
  return convert2csr(std::move(index), filter_matrix(weights));
}

Matrix scatter(const PatternCSR& a) {
  Matrix dense(a.rows(), a.cols());
  const auto rp = a.row_ptr();
  const auto ci = a.col_ind();
  const auto v = a.values();
  for (int r = 0; r < a.rows(); ++r) {
    for (std::int32_t i = rp[r]; i < rp[r + 1]; ++i) dense.at(r, ci[i]) = v[i];
  }
  return dense;
}

Matrix pattern_spmm(const PatternCSR& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("pattern_spmm: inner dimensions differ");
  const int m = b.cols();
  Matrix out(a.rows(), m);
  const SparsityIndex& ix = a.index();
  const std::int32_t* rp = ix.row_ptr.data();
  const std::int32_t* ci = ix.col_ind.data();
  const double* vals = a.values().data();
  const double* bp = b.ptr();
  double* op = out.ptr();
  // Tiles own disjoint output rows and can run independently.
  for (std::size_t t = 0; t + 1 < ix.tile_offsets.size(); ++t) {
    const int row_begin = ix.tile_offsets[t];
    const int row_end = ix.tile_offsets[t + 1];
    for (int j0 = 0; j0 < m; j0 += kColumnBlock) {
      const int width = std::min(kColumnBlock, m - j0);
      for (int r = row_begin; r < row_end; ++r) {
        double* __restrict dst = op + static_cast<std::size_t>(r) * m + j0;
        for (std::int32_t i = rp[r]; i < rp[r + 1]; ++i) {
          const double v = vals[i];
          const double* __restrict src = bp + static_cast<std::size_t>(ci[i]) * m + j0;
          for (int j = 0; j < width; ++j) dst[j] += v * src[j];
        }
      }
    }
  }
  return out;
}

Matrix pattern_spmm_transposed(const PatternCSR& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw ShapeError("pattern_spmm_transposed: row counts differ");
  const int m = b.cols();
  Matrix out(a.cols(), m);
  const SparsityIndex& ix = a.index();
  const double* vals = a.values().data();
  for (int j0 = 0; j0 < m; j0 += kColumnBlock) {
    const int width = std::min(kColumnBlock, m - j0);
    for (int r = 0; r < ix.rows; ++r) {
      const double* __restrict src = b.ptr() + static_cast<std::size_t>(r) * m + j0;
      for (std::int32_t i = ix.row_ptr[r]; i < ix.row_ptr[r + 1]; ++i) {
        const double v = vals[i];
        double* __restrict dst = out.ptr() + static_cast<std::size_t>(ix.col_ind[i]) * m + j0;
        for (int j = 0; j < width; ++j) dst[j] += v * src[j];
      }
    }
  }
  return out;
}

std::vector<double> gather_gemm(const SparsityIndex& index, const Matrix& dy, const Matrix& cols) {
  if (dy.rows() != index.rows || cols.rows() != index.cols || dy.cols() != cols.cols()) {
    throw ShapeError("gather_gemm: operands do not match index");
  }
  const int m = dy.cols();
  std::vector<double> out(index.nnz(), 0.0);
  for (int r = 0; r < index.rows; ++r) {
    const double* a = dy.row(r).data();
    for (std::int32_t i = index.row_ptr[r]; i < index.row_ptr[r + 1]; ++i) {
      const double* b = cols.row(index.col_ind[i]).data();
      double acc = 0.0;
      for (int j = 0; j < m; ++j) acc += a[j] * b[j];
      out[i] = acc;
    }
  }
  return out;
}

SparseConvMeta SparseConvMeta::of(const LayerParams& layer) {
  return SparseConvMeta{layer.channels(), layer.kernel_h(), layer.kernel_w(),
                        layer.stride,     layer.padding,    layer.bias};
}

namespace {

void check_meta(const Shape4& input, const PatternCSR& w, const SparseConvMeta& meta) {
  if (input.d1 != meta.channels) throw ShapeError("sparse conv: input channel mismatch");
  if (w.cols() != meta.channels * meta.kernel_h * meta.kernel_w) {
    throw ShapeError("sparse conv: CSR width does not match C*H*S");
  }
  if (meta.bias.size() != static_cast<std::size_t>(w.rows())) {
    throw ShapeError("sparse conv: bias length != filter count");
  }
}

}  // namespace

FeatureMap sparse_conv_forward(const FeatureMap& input, const PatternCSR& weights,
                               const SparseConvMeta& meta) {
  check_meta(input.shape(), weights, meta);
  const ConvGeometry g =
      conv_geometry(input.shape(), meta.kernel_h, meta.kernel_w, meta.stride, meta.padding);
  const Matrix cols = im2col(input, meta.kernel_h, meta.kernel_w, meta.stride, meta.padding);
  return sparse_conv_forward_cols(cols, input.shape().d0, g, weights, meta);
}

FeatureMap sparse_conv_forward_cols(const Matrix& cols, int batch, const ConvGeometry& geom,
                                    const PatternCSR& weights, const SparseConvMeta& meta) {
  if (cols.cols() != batch * geom.out_h * geom.out_w) {
    throw ShapeError("sparse conv: im2col matrix does not match geometry");
  }
  const Matrix product = pattern_spmm(weights, cols);
  return conv_output_from_product(product, meta.bias, batch, geom);
}

SparseConvGrads sparse_conv_backward(const FeatureMap& delta_out, const FeatureMap& input,
                                     const PatternCSR& weights, const SparseConvMeta& meta,
                                     bool need_delta_in) {
  check_meta(input.shape(), weights, meta);
  const Matrix cols = im2col(input, meta.kernel_h, meta.kernel_w, meta.stride, meta.padding);
  return sparse_conv_backward_cols(delta_out, cols, input.shape(), weights, meta, need_delta_in);
}

SparseConvGrads sparse_conv_backward_cols(const FeatureMap& delta_out, const Matrix& cols,
                                          const Shape4& input_shape, const PatternCSR& weights,
                                          const SparseConvMeta& meta, bool need_delta_in) {
  check_meta(input_shape, weights, meta);
  const ConvGeometry g =
      conv_geometry(input_shape, meta.kernel_h, meta.kernel_w, meta.stride, meta.padding);
  const Shape4& ds = delta_out.shape();
  if (ds.d0 != input_shape.d0 || ds.d1 != weights.rows() || ds.d2 != g.out_h || ds.d3 != g.out_w) {
    throw ShapeError("sparse_conv_backward: delta " + ds.str() + " inconsistent with forward");
  }
  const Matrix dy = channel_major(delta_out);
  SparseConvGrads out;
  out.weight_grad = gather_gemm(weights.index(), dy, cols);
  out.bias_grad.assign(weights.rows(), 0.0);
  for (int f = 0; f < weights.rows(); ++f) {
    double acc = 0.0;
    for (double v : dy.row(f)) acc += v;
    out.bias_grad[f] = acc;
  }
  if (need_delta_in) {
    const Matrix dcols = pattern_spmm_transposed(weights, dy);
    out.delta_in = col2im(dcols, input_shape, meta.kernel_h, meta.kernel_w, meta.stride,
                          meta.padding);
  }
  return out;
}

Tensor4 scatter_to_tensor(const SparsityIndex& index, std::span<const double> values,
                          const Shape4& shape) {
  if (values.size() != index.nnz()) throw ShapeError("scatter_to_tensor: value count != nnz");
  if (shape.d0 != index.rows || shape.d1 * shape.d2 * shape.d3 != index.cols) {
    throw ShapeError("scatter_to_tensor: shape does not match index");
  }
  Tensor4 t(shape);
  auto data = t.data();
  for (int r = 0; r < index.rows; ++r) {
    const std::size_t base = static_cast<std::size_t>(r) * index.cols;
    for (std::int32_t i = index.row_ptr[r]; i < index.row_ptr[r + 1]; ++i) {
      data[base + index.col_ind[i]] = values[i];
    }
  }
  return t;
}

std::string to_string(ConvOperator op) {
  return op == ConvOperator::kPatternSpmm ? "PATTERN_SPMM" : "DENSE_GEMM";
}

LayerExecPlan make_exec_plan(const SparsityPlan& plan, double threshold,
                             std::span<const double> per_layer) {
  if (!per_layer.empty() && per_layer.size() != plan.size()) {
    throw ConfigError("per-layer sparsity thresholds must cover every conv layer");
  }
  LayerExecPlan exec;
  for (std::size_t l = 0; l < plan.size(); ++l) {
    LayerExec e;
    e.threshold = (!per_layer.empty() && per_layer[l] >= 0.0) ? per_layer[l] : threshold;
    e.sparsity_ratio = plan.sparsity_ratio(l);
    const bool eligible = plan.frozen() && plan.layer(l).planned;
    e.op = (eligible && e.sparsity_ratio >= e.threshold) ? ConvOperator::kPatternSpmm
                                                         : ConvOperator::kDenseGemm;
    exec.layers.push_back(e);
  }
  return exec;
}

}  // namespace pattrain
