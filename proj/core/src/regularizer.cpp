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

#include "pattrain/regularizer.hpp"

#include <algorithm>
#include <cmath>

#include "pattrain/error.hpp"

namespace pattrain {

void RegConfig::validate() const {
  if (!(lambda_pattern >= 0.0) || !(lambda_kernel >= 0.0) || !(epsilon >= 0.0) ||
      !(zero_threshold >= 0.0)) {
    throw ConfigError("regularizer coefficients must be non-negative");
  }
}

namespace {

void check_layer(const Tensor4& weights, const SparsityPlan& plan, std::size_t l) {
  const LayerPlan& lp = plan.layer(l);
  if (weights.shape() != Shape4{lp.filters, lp.channels, lp.kernel_h, lp.kernel_w}) {
    throw ShapeError("plan layer " + std::to_string(l) + " does not match weights " +
                     weights.shape().str());
  }
}

// Calls fn(slice, masked_cells, lambda) for every kernel with something masked.
template <class Fn>
void for_each_group(const SparsityPlan& plan, std::size_t l, const RegConfig& cfg, Fn&& fn) {
  const LayerPlan& lp = plan.layer(l);
  if (!lp.planned) return;
  for (int f = 0; f < lp.filters; ++f) {
    for (int c = 0; c < lp.channels; ++c) {
      const bool kept = lp.kept(f, c);
      const Pattern masked =
          kept ? Pattern::from_mask(Pattern::kFullMask & ~plan.kept_cells(l, f, c).mask())
               : Pattern::full();
      fn(f, c, masked, kept ? cfg.lambda_pattern : cfg.lambda_kernel);
    }
  }
}

double group_norm(std::span<const double> s, Pattern cells) {
  double sq = 0.0;
  for (int i = 0; i < Pattern::kCells; ++i) {
    if (cells.contains(i)) sq += s[i] * s[i];
  }
  return std::sqrt(sq);
}

}  // namespace

MaskedTensors masked_tensors(const Tensor4& weights, const SparsityPlan& plan, std::size_t l) {
  check_layer(weights, plan, l);
  MaskedTensors out{Tensor4(weights.shape()), Tensor4(weights.shape())};
  const LayerPlan& lp = plan.layer(l);
  if (!lp.planned) return out;
  for (int f = 0; f < lp.filters; ++f) {
    for (int c = 0; c < lp.channels; ++c) {
      const auto w = weights.slice(f, c);
      if (!lp.kept(f, c)) {
        std::copy(w.begin(), w.end(), out.pruned_kernels.slice(f, c).begin());
        continue;
      }
      const Pattern p = plan.kept_cells(l, f, c);
      auto z = out.pattern_complement.slice(f, c);
      for (int i = 0; i < Pattern::kCells; ++i) z[i] = p.contains(i) ? 0.0 : w[i];
    }
  }
  return out;
}

double reg_loss(const Tensor4& weights, const SparsityPlan& plan, std::size_t l,
                const RegConfig& cfg) {
  cfg.validate();
  check_layer(weights, plan, l);
  double loss = 0.0;
  for_each_group(plan, l, cfg, [&](int f, int c, Pattern masked, double lambda) {
    loss += lambda * group_norm(weights.slice(f, c), masked);
  });
  return loss;
}

Tensor4 reg_grad(const Tensor4& weights, const SparsityPlan& plan, std::size_t l,
                 const RegConfig& cfg) {
  cfg.validate();
  check_layer(weights, plan, l);
  Tensor4 grad(weights.shape());
  for_each_group(plan, l, cfg, [&](int f, int c, Pattern masked, double lambda) {
    const auto w = weights.slice(f, c);
    const double norm = group_norm(w, masked);
    if (norm < cfg.zero_threshold || lambda == 0.0) return;
    const double scale = lambda / std::max(norm, cfg.epsilon);
    auto g = grad.slice(f, c);
    for (int i = 0; i < Pattern::kCells; ++i) {
      if (masked.contains(i)) g[i] = scale * w[i];
    }
  });
  return grad;
}

}  // namespace pattrain
