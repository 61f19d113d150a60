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

#include "pattrain/importance.hpp"

#include <cmath>
#include <numeric>

#include "pattrain/error.hpp"

namespace pattrain {

double pattern_importance(std::span<const double> weights, std::span<const double> grads,
                          Pattern pattern) {
  if (weights.size() != Pattern::kCells || grads.size() != Pattern::kCells) {
    throw ShapeError("pattern_importance: kernel slices must be 3x3");
  }
  double score = 0.0;
  for (int i = 0; i < Pattern::kCells; ++i) {
    if (pattern.contains(i)) score += weight_importance(weights[i], grads[i]);
  }
  return score;
}

double kernel_importance(std::span<const double> weights, std::span<const double> grads) {
  if (weights.size() != grads.size()) throw ShapeError("kernel_importance: slice size mismatch");
  double score = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) score += weight_importance(weights[i], grads[i]);
  return score;
}

LossHistory::LossHistory(int window) : window_(window) {
  if (window < 1) throw ConfigError("loss smoothing window must be >= 1");
}

std::optional<double> LossHistory::smoothed_slope() const {
  const std::size_t w = static_cast<std::size_t>(window_);
  if (losses_.size() < 2 * w) return std::nullopt;
  const auto end = losses_.end();
  const double last = std::accumulate(end - static_cast<std::ptrdiff_t>(w), end, 0.0) / window_;
  const double prev = std::accumulate(end - static_cast<std::ptrdiff_t>(2 * w),
                                      end - static_cast<std::ptrdiff_t>(w), 0.0) /
                      window_;
  return (last - prev) / window_;
}

std::optional<bool> should_start_pruning(const LossHistory& history, double threshold) {
  const auto slope = history.smoothed_slope();
  if (!slope) return std::nullopt;
  return std::abs(*slope) < threshold;
}

}  // namespace pattrain
