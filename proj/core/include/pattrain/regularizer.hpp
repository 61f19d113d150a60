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

#ifndef PATTRAIN_REGULARIZER_HPP_
#define PATTRAIN_REGULARIZER_HPP_

#include <cstddef>

#include "pattrain/sparsity_plan.hpp"
#include "pattrain/tensor.hpp"

namespace pattrain {

// Masked group lasso. Only two kinds of weight are penalized: cells outside
// the chosen pattern of a kept kernel (Z) and every cell of a pruned kernel
// (U). Each kernel's masked cells form one group; the penalty is
//   lambda_pattern * sum ||Z_group|| + lambda_kernel * sum ||U_group||.
struct RegConfig {
  double lambda_pattern = 0.00025;
  double lambda_kernel = 0.00025;
  double epsilon = 1e-12;         // floor of the norm in the gradient denominator
  double zero_threshold = 1e-8;   // groups below this norm get zero gradient

  void validate() const;
};

struct MaskedTensors {
  Tensor4 pattern_complement;  // Z
  Tensor4 pruned_kernels;      // U
};

MaskedTensors masked_tensors(const Tensor4& weights, const SparsityPlan& plan, std::size_t l);

double reg_loss(const Tensor4& weights, const SparsityPlan& plan, std::size_t l,
                const RegConfig& cfg);

/// d reg_loss / d weights; exactly 0.0 on the kept cells of kept kernels.
Tensor4 reg_grad(const Tensor4& weights, const SparsityPlan& plan, std::size_t l,
                 const RegConfig& cfg);

}  // namespace pattrain

#endif  // PATTRAIN_REGULARIZER_HPP_
