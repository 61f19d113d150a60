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

// Adaptive pattern and kernel finalization. Over the finalization epochs
// every batch votes, per kernel, for the pool pattern with the best
// importance and adds the kernel's importance to a running sum. Batches whose
// loss jumps are skipped. The votes and sums then become a SparsityPlan.

#ifndef PATTRAIN_FINALIZER_HPP_
#define PATTRAIN_FINALIZER_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pattrain/pattern.hpp"
#include "pattrain/sparsity_plan.hpp"
#include "pattrain/tensor.hpp"

namespace pattrain {

enum class SpikeRule {
  kRelativeIncrease,  // skip when cur/prev - 1 > delta_spike
  kLiteralQuotient,   // skip when prev/cur < delta_literal
};

struct SpikeConfig {
  SpikeRule rule = SpikeRule::kRelativeIncrease;
  double delta_spike = 0.1;
  double delta_literal = 0.0018;
};

/// False when prev_loss is not finite (first batch of a run).
bool is_loss_spike(double prev_loss, double cur_loss, const SpikeConfig& cfg);

/// Weights and gradients of one conv layer, borrowed for a call.
struct ConvLayerView {
  const Tensor4* weights = nullptr;
  const Tensor4* grads = nullptr;
};

class OccurrenceTable {
 public:
  OccurrenceTable() = default;
  /// Tracks every 3x3 layer in `weight_shapes`; others get no entries.
  OccurrenceTable(const std::vector<Shape4>& weight_shapes, std::size_t pool_size);

  std::size_t layers() const { return layers_.size(); }
  bool tracked(std::size_t l) const { return layers_.at(l).tracked; }
  std::size_t pool_size() const { return pool_size_; }
  std::size_t kernels(std::size_t l) const { return layers_.at(l).importance.size(); }
  int channels(std::size_t l) const { return layers_.at(l).channels; }

  std::span<const std::uint32_t> counts(std::size_t l, std::size_t kernel) const;
  double importance(std::size_t l, std::size_t kernel) const {
    return layers_.at(l).importance.at(kernel);
  }
  std::uint64_t batches_counted() const { return counted_; }
  std::uint64_t batches_skipped() const { return skipped_; }

  void vote(std::size_t l, std::size_t kernel, std::size_t pattern);
  void add_importance(std::size_t l, std::size_t kernel, double score);
  void note_batch(bool counted) { counted ? ++counted_ : ++skipped_; }

  // Raw access for checkpointing.
  struct Layer {
    bool tracked = false;
    int channels = 0;
    std::vector<std::uint32_t> counts;  // kernels x pool_size
    std::vector<double> importance;     // per kernel
    bool operator==(const Layer&) const = default;
  };
  const std::vector<Layer>& raw() const { return layers_; }
  static OccurrenceTable from_raw(std::vector<Layer> layers, std::size_t pool_size,
                                  std::uint64_t counted, std::uint64_t skipped);

  bool operator==(const OccurrenceTable&) const = default;

 private:
  std::vector<Layer> layers_;
  std::size_t pool_size_ = 0;
  std::uint64_t counted_ = 0;
  std::uint64_t skipped_ = 0;
};

/// Pool index with the highest pattern importance; ties to the lowest index.
int best_pool_pattern(std::span<const double> weights, std::span<const double> grads,
                      const PatternPool& pool);

// One training batch of finalization. Returns false (and changes nothing
// but the skip counter) when the batch is a loss spike.
bool record_batch(OccurrenceTable& table, std::span<const ConvLayerView> layers,
                  const PatternPool& pool, double prev_loss, double cur_loss,
                  const SpikeConfig& spike);

// Per-kernel mode of the votes, ties to the lowest pattern index. A kernel
// with no votes is assigned by a one-shot argmax over `fallback`; without it
// such a kernel is a StateError. Untracked layers yield empty vectors.
std::vector<std::vector<std::int16_t>> finalize_patterns(
    const OccurrenceTable& table, const PatternPool& pool,
    std::optional<std::span<const ConvLayerView>> fallback = std::nullopt);

/// How many kernels to remove per filter.
struct PruneAmount {
  std::optional<double> fraction;      // in [0, 0.9]
  std::optional<int> count_per_filter;

  static PruneAmount of_fraction(double f) { return PruneAmount{f, std::nullopt}; }
  static PruneAmount of_count(int n) { return PruneAmount{std::nullopt, n}; }
  int per_filter(int channels) const;  // validates
};

// Keep-mask (1 = keep) for layer `l`. Each filter loses the same number of
// kernels, its lowest accumulated importance first (ties to lower channel).
std::vector<std::uint8_t> select_pruned_kernels(const OccurrenceTable& table, std::size_t l,
                                                const PruneAmount& amount);

/// Combines pattern choices and keep-masks into an unfrozen plan.
SparsityPlan assemble_plan(const PatternPool& pool, const std::vector<Shape4>& weight_shapes,
                           const std::vector<std::vector<std::int16_t>>& patterns,
                           const std::vector<std::vector<std::uint8_t>>& keep);

/// Zeroes every coordinate the frozen plan drops. StateError if not frozen.
void hard_prune(Tensor4& weights, const SparsityPlan& plan, std::size_t l);

/// Multiplies `t` by the plan mask of layer `l` (used on gradients).
void apply_plan_mask(Tensor4& t, const SparsityPlan& plan, std::size_t l);

/// Number of pruned coordinates of layer `l` holding something other than +/-0.0.
std::size_t count_pruned_nonzeros(const Tensor4& weights, const SparsityPlan& plan, std::size_t l);

}  // namespace pattrain

#endif  // PATTRAIN_FINALIZER_HPP_
