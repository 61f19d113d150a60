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

#ifndef PATTRAIN_SPARSITY_PLAN_HPP_
#define PATTRAIN_SPARSITY_PLAN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pattrain/pattern.hpp"
#include "pattrain/tensor.hpp"

namespace pattrain {

// Frozen sparsity decisions of one conv layer. A layer is "planned" when its
// kernels are 3x3; other layers stay dense and carry no assignments.
// pattern_index[f * channels + c] is an index into the pool, or kPruned.
struct LayerPlan {
  static constexpr std::int16_t kPruned = -1;

  bool planned = false;
  int filters = 0;
  int channels = 0;
  int kernel_h = 3;
  int kernel_w = 3;
  std::vector<std::int16_t> pattern_index;

  static LayerPlan dense(const Shape4& weight_shape);
  /// Planned layer with every kernel kept on pool pattern 0.
  static LayerPlan uniform(const Shape4& weight_shape, std::int16_t pattern = 0);

  std::size_t kernels() const { return static_cast<std::size_t>(filters) * channels; }
  std::size_t kernel_id(int f, int c) const { return static_cast<std::size_t>(f) * channels + c; }
  bool kept(int f, int c) const {
    return !planned || pattern_index[kernel_id(f, c)] != kPruned;
  }
  std::size_t total_weights() const { return kernels() * kernel_h * kernel_w; }
  std::size_t kept_kernels() const;
  bool operator==(const LayerPlan&) const = default;
};

class SparsityPlan {
 public:
  SparsityPlan() = default;
  SparsityPlan(PatternPool pool, std::vector<LayerPlan> layers);

  const PatternPool& pool() const { return pool_; }
  const std::vector<LayerPlan>& layers() const { return layers_; }
  const LayerPlan& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t size() const { return layers_.size(); }
  bool frozen() const { return frozen_; }

  /// Validates every invariant, then marks the plan immutable.
  void freeze();
  void validate() const;

  /// Cells kept by kernel (f, c) of layer `l`; the full mask for dense layers.
  Pattern kept_cells(std::size_t l, int f, int c) const;
  /// 1.0 on kept coordinates, 0.0 on pruned ones.
  Tensor4 mask(std::size_t l) const;

  std::size_t nonzeros(std::size_t l) const;
  std::size_t total(std::size_t l) const { return layers_.at(l).total_weights(); }
  /// zeros / total of layer `l`, from integer counts.
  double sparsity_ratio(std::size_t l) const;
  /// Total conv weights over nonzero conv weights.
  double compression_ratio() const;

  bool operator==(const SparsityPlan&) const = default;

 private:
  PatternPool pool_;
  std::vector<LayerPlan> layers_;
  bool frozen_ = false;
};

}  // namespace pattrain

#endif  // PATTRAIN_SPARSITY_PLAN_HPP_
