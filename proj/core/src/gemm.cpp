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

#include "pattrain/gemm.hpp"

#include <cblas.h>

#include <string>

namespace pattrain {

void gemm(Trans trans_a, Trans trans_b, int m, int n, int k, double alpha,
          std::span<const double> a, std::span<const double> b, double beta,
          std::span<double> c) {
  const auto need = [](int r, int cc) { return static_cast<std::size_t>(r) * cc; };
  if (a.size() < need(m, k) || b.size() < need(k, n) || c.size() < need(m, n)) {
    throw ShapeError("gemm: operand too small for " + std::to_string(m) + "x" +
                     std::to_string(k) + " * " + std::to_string(k) + "x" + std::to_string(n));
  }
  if (m == 0 || n == 0) return;
  const int lda = (trans_a == Trans::kNo) ? k : m;
  const int ldb = (trans_b == Trans::kNo) ? n : k;
  cblas_dgemm(CblasRowMajor, trans_a == Trans::kNo ? CblasNoTrans : CblasTrans,
              trans_b == Trans::kNo ? CblasNoTrans : CblasTrans, m, n, k, alpha, a.data(), lda,
              b.data(), ldb, beta, c.data(), n);
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dims differ");
  Matrix c(a.rows(), b.cols());
  gemm(Trans::kNo, Trans::kNo, a.rows(), b.cols(), a.cols(), 1.0, a.data(), b.data(), 0.0,
       c.data());
  return c;
}

void naive_gemm(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw ShapeError("naive_gemm: dimension mismatch");
  }
  const int m = a.rows();
  const int k = a.cols();
  const int n = b.cols();
  c.fill(0.0);
  for (int i = 0; i < m; ++i) {
    double* out = c.row(i).data();
    for (int p = 0; p < k; ++p) {
      const double v = a.at(i, p);
      const double* in = b.row(p).data();
      for (int j = 0; j < n; ++j) out[j] += v * in[j];
    }
  }
}

}  // namespace pattrain
