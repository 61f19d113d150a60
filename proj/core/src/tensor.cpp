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

#include "pattrain/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace pattrain {

std::string Shape4::str() const {
  return "(" + std::to_string(d0) + "," + std::to_string(d1) + "," + std::to_string(d2) + "," +
         std::to_string(d3) + ")";
}

Matrix::Matrix(int rows, int cols, double fill) : rows_(rows), cols_(cols) {
  if (rows < 0 || cols < 0) throw ShapeError("negative matrix extent");
  data_.assign(static_cast<std::size_t>(rows) * cols, fill);
}

Matrix::Matrix(int rows, int cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (rows < 0 || cols < 0) throw ShapeError("negative matrix extent");
  if (data_.size() != static_cast<std::size_t>(rows) * cols) {
    throw ShapeError("matrix data length does not match " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

Matrix filter_matrix(const Tensor4& weights) {
  const auto& s = weights.shape();
  return Matrix(s.d0, s.d1 * s.d2 * s.d3, weights.storage());
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("max_abs_diff: sizes " + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace pattrain
