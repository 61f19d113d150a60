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

#ifndef PATTRAIN_TENSOR_HPP_
#define PATTRAIN_TENSOR_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pattrain/error.hpp"

namespace pattrain {

/// Four extents of a row-major array, outermost first.
struct Shape4 {
  int d0 = 1;
  int d1 = 1;
  int d2 = 1;
  int d3 = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(d0) * d1 * d2 * d3;
  }
  bool operator==(const Shape4&) const = default;
  std::string str() const;
};

struct WeightTag {};
struct ActivationTag {};

// Dense row-major 4-D array of doubles. The tag keeps weight tensors
// (filter, channel, row, col) and feature maps (batch, channel, row, col)
// from being mixed up at call sites.
template <class Tag>
class Array4 {
 public:
  Array4() = default;
  Array4(int d0, int d1, int d2, int d3) : Array4(Shape4{d0, d1, d2, d3}) {}
  explicit Array4(Shape4 shape, double fill = 0.0) : shape_(shape) {
    if (shape.d0 < 1 || shape.d1 < 1 || shape.d2 < 1 || shape.d3 < 1) {
      throw ShapeError("all tensor dims must be >= 1, got " + shape.str());
    }
    data_.assign(shape.size(), fill);
  }
  Array4(Shape4 shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (shape.d0 < 1 || shape.d1 < 1 || shape.d2 < 1 || shape.d3 < 1) {
      throw ShapeError("all tensor dims must be >= 1, got " + shape.str());
    }
    if (data_.size() != shape.size()) {
      throw ShapeError("data length " + std::to_string(data_.size()) +
                       " does not match dims " + shape.str());
    }
  }

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t offset(int i0, int i1, int i2, int i3) const {
    return ((static_cast<std::size_t>(i0) * shape_.d1 + i1) * shape_.d2 + i2) * shape_.d3 + i3;
  }
  double& at(int i0, int i1, int i2, int i3) { return data_[offset(i0, i1, i2, i3)]; }
  double at(int i0, int i1, int i2, int i3) const { return data_[offset(i0, i1, i2, i3)]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::vector<double>& storage() { return data_; }
  const std::vector<double>& storage() const { return data_; }

  /// Contiguous inner 2-D block selected by the two outer indices.
  std::span<double> slice(int i0, int i1) {
    const std::size_t n = static_cast<std::size_t>(shape_.d2) * shape_.d3;
    return std::span<double>(data_).subspan(offset(i0, i1, 0, 0), n);
  }
  std::span<const double> slice(int i0, int i1) const {
    const std::size_t n = static_cast<std::size_t>(shape_.d2) * shape_.d3;
    return std::span<const double>(data_).subspan(offset(i0, i1, 0, 0), n);
  }

  void fill(double v) { data_.assign(data_.size(), v); }

  bool operator==(const Array4&) const = default;

 private:
  Shape4 shape_{};
  std::vector<double> data_;
};

/// Convolution weights or their gradient, indexed (filter, channel, row, col).
using Tensor4 = Array4<WeightTag>;
/// Activations or error signals, indexed (batch, channel, row, col).
using FeatureMap = Array4<ActivationTag>;

/// Row-major dense matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0);
  Matrix(int rows, int cols, std::vector<double> data);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double at(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::span<double> row(int r) {
    return std::span<double>(data_).subspan(static_cast<std::size_t>(r) * cols_, cols_);
  }
  std::span<const double> row(int r) const {
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(r) * cols_, cols_);
  }

  double* ptr() { return data_.data(); }
  const double* ptr() const { return data_.data(); }
  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }
  bool operator==(const Matrix&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// Weights of a conv layer viewed as the F x (C*H*S) filter matrix (copy).
Matrix filter_matrix(const Tensor4& weights);

/// Largest absolute elementwise difference; throws ShapeError on size mismatch.
double max_abs_diff(std::span<const double> a, std::span<const double> b);

}  // namespace pattrain

#endif  // PATTRAIN_TENSOR_HPP_
