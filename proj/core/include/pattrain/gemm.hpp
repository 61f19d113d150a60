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

#ifndef PATTRAIN_GEMM_HPP_
#define PATTRAIN_GEMM_HPP_

#include <span>

#include "pattrain/tensor.hpp"

namespace pattrain {

enum class Trans { kNo, kYes };

// C = alpha * op(A) * op(B) + beta * C with row-major storage.
// op(A) is M x K, op(B) is K x N, C is M x N. Backed by BLAS dgemm.
void gemm(Trans trans_a, Trans trans_b, int m, int n, int k, double alpha,
          std::span<const double> a, std::span<const double> b, double beta, std::span<double> c);

/// Matrix product through the BLAS path.
Matrix matmul(const Matrix& a, const Matrix& b);

// Straightforward i-k-j triple loop, no blocking and no zero skipping.
// It is the dense baseline the pattern SpMM is measured against.
void naive_gemm(const Matrix& a, const Matrix& b, Matrix& c);

}  // namespace pattrain

#endif  // PATTRAIN_GEMM_HPP_
