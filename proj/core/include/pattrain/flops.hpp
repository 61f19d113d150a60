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

#ifndef PATTRAIN_FLOPS_HPP_
#define PATTRAIN_FLOPS_HPP_

#include <vector>

#include "pattrain/model.hpp"
#include "pattrain/sparse_exec.hpp"
#include "pattrain/sparsity_plan.hpp"

namespace pattrain {

/// Total conv weights over nonzero conv weights of the current parameters.
double compression_ratio(const Model& model);

struct LayerFlops {
  double dense_forward = 0.0;  // 2 F C H S outH outW batch
  double forward = 0.0;        // after sparse execution, if any
  double kept_fraction = 1.0;  // nonzeros / total when sparse
  bool sparse = false;
};

// Conv layers only. Backward is counted as twice the forward cost.
struct FlopsReport {
  std::vector<LayerFlops> layers;
  double dense_inference = 0.0;
  double inference = 0.0;
  double dense_train = 0.0;
  double train = 0.0;

  double inference_saved_pct() const;
  double train_saved_pct() const;
};

/// `plan` and `exec` may be null for a dense model. `input` is (batch, C, H, W).
FlopsReport flops_report(const Model& model, const SparsityPlan* plan,
                         const LayerExecPlan* exec, const Shape4& input);

}  // namespace pattrain

#endif  // PATTRAIN_FLOPS_HPP_
