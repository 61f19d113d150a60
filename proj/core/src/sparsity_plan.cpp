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

#include "pattrain/sparsity_plan.hpp"

#include "pattrain/error.hpp"

namespace pattrain {

LayerPlan LayerPlan::dense(const Shape4& weight_shape) {
  LayerPlan p;
  p.planned = false;
  p.filters = weight_shape.d0;
  p.channels = weight_shape.d1;
  p.kernel_h = weight_shape.d2;
  p.kernel_w = weight_shape.d3;
  return p;
}

LayerPlan LayerPlan::uniform(const Shape4& weight_shape, std::int16_t pattern) {
  if (weight_shape.d2 != Pattern::kSide || weight_shape.d3 != Pattern::kSide) {
    throw ShapeError("only 3x3 layers can be pattern-planned, got " + weight_shape.str());
  }
  LayerPlan p = dense(weight_shape);
  p.planned = true;
  p.pattern_index.assign(p.kernels(), pattern);
  return p;
}

std::size_t LayerPlan::kept_kernels() const {
  if (!planned) return kernels();
  std::size_t n = 0;
  for (auto idx : pattern_index) n += (idx != kPruned);
  return n;
}

SparsityPlan::SparsityPlan(PatternPool pool, std::vector<LayerPlan> layers)
    : pool_(std::move(pool)), layers_(std::move(layers)) {}

void SparsityPlan::validate() const {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const LayerPlan& lp = layers_[l];
    if (!lp.planned) continue;
    if (lp.kernel_h != Pattern::kSide || lp.kernel_w != Pattern::kSide) {
      throw IntegrityError("layer " + std::to_string(l) + ": planned layer is not 3x3");
    }
    if (lp.pattern_index.size() != lp.kernels()) {
      throw IntegrityError("layer " + std::to_string(l) + ": assignment count mismatch");
    }
    for (auto idx : lp.pattern_index) {
      if (idx != LayerPlan::kPruned && (idx < 0 || static_cast<std::size_t>(idx) >= pool_.size())) {
        throw IntegrityError("layer " + std::to_string(l) + ": pattern index " +
                             std::to_string(idx) + " outside pool of " +
                             std::to_string(pool_.size()));
      }
    }
  }
}

void SparsityPlan::freeze() {
  validate();
  frozen_ = true;
}

Pattern SparsityPlan::kept_cells(std::size_t l, int f, int c) const {
  const LayerPlan& lp = layers_.at(l);
  if (!lp.planned) return Pattern::full();
  const auto idx = lp.pattern_index[lp.kernel_id(f, c)];
  return idx == LayerPlan::kPruned ? Pattern{} : pool_[static_cast<std::size_t>(idx)];
}

Tensor4 SparsityPlan::mask(std::size_t l) const {
  const LayerPlan& lp = layers_.at(l);
  Tensor4 m(lp.filters, lp.channels, lp.kernel_h, lp.kernel_w);
  if (!lp.planned) {
    m.fill(1.0);
    return m;
  }
  for (int f = 0; f < lp.filters; ++f) {
    for (int c = 0; c < lp.channels; ++c) {
      const Pattern p = kept_cells(l, f, c);
      auto s = m.slice(f, c);
      for (int i = 0; i < Pattern::kCells; ++i) s[i] = p.contains(i) ? 1.0 : 0.0;
    }
  }
  return m;
}

std::size_t SparsityPlan::nonzeros(std::size_t l) const {
  const LayerPlan& lp = layers_.at(l);
  if (!lp.planned) return lp.total_weights();
  return lp.kept_kernels() * Pattern::kCardinality;
}

double SparsityPlan::sparsity_ratio(std::size_t l) const {
  const std::size_t total = layers_.at(l).total_weights();
  return static_cast<double>(total - nonzeros(l)) / static_cast<double>(total);
}

double SparsityPlan::compression_ratio() const {
  std::size_t total = 0;
  std::size_t nnz = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    total += layers_[l].total_weights();
    nnz += nonzeros(l);
  }
  if (nnz == 0) throw IntegrityError("plan prunes every conv weight");
  return static_cast<double>(total) / static_cast<double>(nnz);
}

}  // namespace pattrain
