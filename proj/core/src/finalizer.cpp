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

#include "pattrain/finalizer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pattrain/error.hpp"
#include "pattrain/importance.hpp"

namespace pattrain {

bool is_loss_spike(double prev_loss, double cur_loss, const SpikeConfig& cfg) {
  if (!std::isfinite(prev_loss) || !std::isfinite(cur_loss)) return false;
  switch (cfg.rule) {
    case SpikeRule::kRelativeIncrease:
      return prev_loss > 0.0 && cur_loss / prev_loss - 1.0 > cfg.delta_spike;
    case SpikeRule::kLiteralQuotient:
      return cur_loss > 0.0 && prev_loss / cur_loss < cfg.delta_literal;
  }
  return false;
}

OccurrenceTable::OccurrenceTable(const std::vector<Shape4>& weight_shapes, std::size_t pool_size)
    : pool_size_(pool_size) {
  for (const Shape4& s : weight_shapes) {
    Layer layer;
    layer.tracked = s.d2 == Pattern::kSide && s.d3 == Pattern::kSide;
    layer.channels = s.d1;
    if (layer.tracked) {
      const std::size_t kernels = static_cast<std::size_t>(s.d0) * s.d1;
      layer.counts.assign(kernels * pool_size, 0);
      layer.importance.assign(kernels, 0.0);
    }
    layers_.push_back(std::move(layer));
  }
}

std::span<const std::uint32_t> OccurrenceTable::counts(std::size_t l, std::size_t kernel) const {
  const Layer& layer = layers_.at(l);
  return std::span<const std::uint32_t>(layer.counts).subspan(kernel * pool_size_, pool_size_);
}

void OccurrenceTable::vote(std::size_t l, std::size_t kernel, std::size_t pattern) {
  ++layers_.at(l).counts.at(kernel * pool_size_ + pattern);
}

void OccurrenceTable::add_importance(std::size_t l, std::size_t kernel, double score) {
  layers_.at(l).importance.at(kernel) += score;
}

OccurrenceTable OccurrenceTable::from_raw(std::vector<Layer> layers, std::size_t pool_size,
                                          std::uint64_t counted, std::uint64_t skipped) {
  OccurrenceTable t;
  for (const Layer& l : layers) {
    if (l.tracked && l.counts.size() != l.importance.size() * pool_size) {
      throw IntegrityError("occurrence table: count array does not match pool size");
    }
  }
  t.layers_ = std::move(layers);
  t.pool_size_ = pool_size;
  t.counted_ = counted;
  t.skipped_ = skipped;
  return t;
}

int best_pool_pattern(std::span<const double> weights, std::span<const double> grads,
                      const PatternPool& pool) {
  if (pool.empty()) throw StateError("pattern pool is empty");
  int best = 0;
  double best_score = pattern_importance(weights, grads, pool[0]);
  for (std::size_t i = 1; i < pool.size(); ++i) {
    const double s = pattern_importance(weights, grads, pool[i]);
    if (s > best_score) {
      best = static_cast<int>(i);
      best_score = s;
    }
  }
  return best;
}

bool record_batch(OccurrenceTable& table, std::span<const ConvLayerView> layers,
                  const PatternPool& pool, double prev_loss, double cur_loss,
                  const SpikeConfig& spike) {
  if (layers.size() != table.layers()) throw ShapeError("record_batch: layer count mismatch");
  if (pool.size() != table.pool_size()) throw ShapeError("record_batch: pool size mismatch");
  if (is_loss_spike(prev_loss, cur_loss, spike)) {
    table.note_batch(false);
    return false;
  }
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (!table.tracked(l)) continue;
    const Tensor4& w = *layers[l].weights;
    const Tensor4& g = *layers[l].grads;
    if (w.shape() != g.shape()) throw ShapeError("record_batch: weight/grad shape mismatch");
    const Shape4& s = w.shape();
    for (int f = 0; f < s.d0; ++f) {
      for (int c = 0; c < s.d1; ++c) {
        const std::size_t k = static_cast<std::size_t>(f) * s.d1 + c;
        const auto ws = w.slice(f, c);
        const auto gs = g.slice(f, c);
        table.vote(l, k, static_cast<std::size_t>(best_pool_pattern(ws, gs, pool)));
        table.add_importance(l, k, kernel_importance(ws, gs));
      }
    }
  }
  table.note_batch(true);
  return true;
}

std::vector<std::vector<std::int16_t>> finalize_patterns(
    const OccurrenceTable& table, const PatternPool& pool,
    std::optional<std::span<const ConvLayerView>> fallback) {
  std::vector<std::vector<std::int16_t>> out(table.layers());
  for (std::size_t l = 0; l < table.layers(); ++l) {
    if (!table.tracked(l)) continue;
    const std::size_t kernels = table.kernels(l);
    out[l].resize(kernels);
    for (std::size_t k = 0; k < kernels; ++k) {
      const auto counts = table.counts(l, k);
      const auto top = std::max_element(counts.begin(), counts.end());
      if (top != counts.end() && *top > 0) {
        out[l][k] = static_cast<std::int16_t>(top - counts.begin());
        continue;
      }
      if (!fallback || fallback->size() != table.layers()) {
        throw StateError("kernel " + std::to_string(k) + " of layer " + std::to_string(l) +
                         " has no counted batches and no fallback weights were given");
      }
      const int channels = table.channels(l);
      const int f = static_cast<int>(k / channels);
      const int c = static_cast<int>(k % channels);
      const auto& view = (*fallback)[l];
      out[l][k] = static_cast<std::int16_t>(
          best_pool_pattern(view.weights->slice(f, c), view.grads->slice(f, c), pool));
    }
  }
  return out;
}

int PruneAmount::per_filter(int channels) const {
  if (fraction && count_per_filter) throw ConfigError("give either a prune fraction or a count");
  int n = 0;
  if (fraction) {
    if (!(*fraction >= 0.0 && *fraction <= 0.9)) {
      throw ConfigError("prune fraction must lie in [0, 0.9]");
    }
    n = static_cast<int>(std::floor(*fraction * channels + 1e-9));
  } else if (count_per_filter) {
    n = *count_per_filter;
    if (n < 0) throw ConfigError("prune count must be non-negative");
  }
  if (n >= channels && n > 0) {
    throw ConfigError("pruning " + std::to_string(n) + " of " + std::to_string(channels) +
                      " kernels per filter would empty the layer");
  }
  return n;
}

std::vector<std::uint8_t> select_pruned_kernels(const OccurrenceTable& table, std::size_t l,
                                                const PruneAmount& amount) {
  if (!table.tracked(l)) throw StateError("layer " + std::to_string(l) + " is not planned");
  const int channels = table.channels(l);
  const std::size_t kernels = table.kernels(l);
  const int per_filter = amount.per_filter(channels);
  std::vector<std::uint8_t> keep(kernels, 1);
  const int filters = static_cast<int>(kernels / channels);
  std::vector<int> order(channels);
  for (int f = 0; f < filters; ++f) {
    std::iota(order.begin(), order.end(), 0);
    const std::size_t base = static_cast<std::size_t>(f) * channels;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return table.importance(l, base + a) < table.importance(l, base + b);
    });
    for (int i = 0; i < per_filter; ++i) keep[base + order[i]] = 0;
  }
  return keep;
}

SparsityPlan assemble_plan(const PatternPool& pool, const std::vector<Shape4>& weight_shapes,
                           const std::vector<std::vector<std::int16_t>>& patterns,
                           const std::vector<std::vector<std::uint8_t>>& keep) {
  if (patterns.size() != weight_shapes.size() || keep.size() != weight_shapes.size()) {
    throw ShapeError("assemble_plan: per-layer inputs disagree in length");
  }
  std::vector<LayerPlan> layers;
  for (std::size_t l = 0; l < weight_shapes.size(); ++l) {
    if (patterns[l].empty()) {
      layers.push_back(LayerPlan::dense(weight_shapes[l]));
      continue;
    }
    LayerPlan lp = LayerPlan::uniform(weight_shapes[l]);
    if (patterns[l].size() != lp.kernels() || (!keep[l].empty() && keep[l].size() != lp.kernels())) {
      throw ShapeError("assemble_plan: layer " + std::to_string(l) + " kernel count mismatch");
    }
    for (std::size_t k = 0; k < lp.kernels(); ++k) {
      const bool kept = keep[l].empty() || keep[l][k] != 0;
      lp.pattern_index[k] = kept ? patterns[l][k] : LayerPlan::kPruned;
    }
    layers.push_back(std::move(lp));
  }
  SparsityPlan plan(pool, std::move(layers));
  plan.validate();
  return plan;
}

void hard_prune(Tensor4& weights, const SparsityPlan& plan, std::size_t l) {
  if (!plan.frozen()) throw StateError("hard_prune needs a frozen plan");
  apply_plan_mask(weights, plan, l);
}

void apply_plan_mask(Tensor4& t, const SparsityPlan& plan, std::size_t l) {
  const LayerPlan& lp = plan.layer(l);
  if (t.shape() != Shape4{lp.filters, lp.channels, lp.kernel_h, lp.kernel_w}) {
    throw ShapeError("plan layer " + std::to_string(l) + " does not match tensor " +
                     t.shape().str());
  }
  if (!lp.planned) return;
  for (int f = 0; f < lp.filters; ++f) {
    for (int c = 0; c < lp.channels; ++c) {
      const Pattern p = plan.kept_cells(l, f, c);
      auto s = t.slice(f, c);
      for (int i = 0; i < Pattern::kCells; ++i) {
        if (!p.contains(i)) s[i] = 0.0;
      }
    }
  }
}

std::size_t count_pruned_nonzeros(const Tensor4& weights, const SparsityPlan& plan,
                                  std::size_t l) {
  const LayerPlan& lp = plan.layer(l);
  if (!lp.planned) return 0;
  std::size_t n = 0;
  for (int f = 0; f < lp.filters; ++f) {
    for (int c = 0; c < lp.channels; ++c) {
      const Pattern p = plan.kept_cells(l, f, c);
      const auto s = weights.slice(f, c);
      for (int i = 0; i < Pattern::kCells; ++i) n += (!p.contains(i) && s[i] != 0.0);
    }
  }
  return n;
}

}  // namespace pattrain
