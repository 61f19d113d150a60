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

// Gradient-weighted importance: a weight w with gradient g scores (g*w)^2,
// patterns and kernels score the sum over the cells they cover.

#ifndef PATTRAIN_IMPORTANCE_HPP_
#define PATTRAIN_IMPORTANCE_HPP_

#include <optional>
#include <span>
#include <vector>

#include "pattrain/pattern.hpp"

namespace pattrain {

inline double weight_importance(double w, double g) {
  const double t = g * w;
  return t * t;
}

/// Sum of (g*w)^2 over the cells of `pattern`. Slices must hold 9 values.
double pattern_importance(std::span<const double> weights, std::span<const double> grads,
                          Pattern pattern);

/// Sum of (g*w)^2 over the whole kernel (any H*S).
double kernel_importance(std::span<const double> weights, std::span<const double> grads);

/// Per-epoch mean training loss, append-only.
class LossHistory {
 public:
  static constexpr int kDefaultWindow = 5;

  explicit LossHistory(int window = kDefaultWindow);

  void append(double epoch_loss) { losses_.push_back(epoch_loss); }
  int window() const { return window_; }
  const std::vector<double>& losses() const { return losses_; }
  std::size_t size() const { return losses_.size(); }

  // (mean of the last `window` losses - mean of the `window` before them)
  // / window. Empty until 2*window epochs are recorded.
  std::optional<double> smoothed_slope() const;

  bool operator==(const LossHistory&) const = default;

 private:
  int window_;
  std::vector<double> losses_;
};

// Stage-1 trigger. nullopt means "not enough history yet", which is distinct
// from a false "keep warming up".
std::optional<bool> should_start_pruning(const LossHistory& history, double threshold);

}  // namespace pattrain

#endif  // PATTRAIN_IMPORTANCE_HPP_
