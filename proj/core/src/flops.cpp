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

#include "pattrain/flops.hpp"

#include "pattrain/error.hpp"

namespace pattrain {

double compression_ratio(const Model& model) {
  std::size_t total = 0;
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < model.conv_count(); ++i) {
    for (double w : model.conv(i).weights.data()) {
      ++total;
      if (w != 0.0) ++nonzero;
    }
  }
  if (total == 0) return 1.0;
  if (nonzero == 0) throw StateError("compression_ratio: every conv weight is zero");
  return static_cast<double>(total) / static_cast<double>(nonzero);
}

double FlopsReport::inference_saved_pct() const {
  return dense_inference > 0.0 ? 100.0 * (1.0 - inference / dense_inference) : 0.0;
}

double FlopsReport::train_saved_pct() const {
  return dense_train > 0.0 ? 100.0 * (1.0 - train / dense_train) : 0.0;
}

FlopsReport flops_report(const Model& model, const SparsityPlan* plan, const LayerExecPlan* exec,
                         const Shape4& input) {
  const Shape4& s = model.sample_shape();
  if (input.d1 != s.d1 || input.d2 != s.d2 || input.d3 != s.d3) {
    throw ShapeError("flops_report: input " + input.str() + " does not match the model");
  }
  if (exec && exec->layers.size() != model.conv_count()) {
    throw ShapeError("flops_report: exec plan does not cover every conv layer");
  }
  if (exec && !plan) throw StateError("flops_report: an exec plan needs its sparsity plan");
  FlopsReport r;
  const auto shapes = model.layer_input_shapes();
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    const Model::Layer& layer = model.layers()[li];
    if (layer.kind != LayerKind::kConv) continue;
    const LayerParams& p = model.conv(layer.param);
    const ConvGeometry g =
        conv_geometry(shapes[li], p.kernel_h(), p.kernel_w(), p.stride, p.padding);
    LayerFlops lf;
    lf.dense_forward = 2.0 * p.filters() * p.channels() * p.kernel_h() * p.kernel_w() *
                       g.out_h * g.out_w * input.d0;
    lf.forward = lf.dense_forward;
    if (exec && exec->layers[layer.param].op == ConvOperator::kPatternSpmm) {
      lf.sparse = true;
      lf.kept_fraction = static_cast<double>(plan->nonzeros(layer.param)) /
                         static_cast<double>(plan->total(layer.param));
      lf.forward = lf.dense_forward * lf.kept_fraction;
    }
    r.layers.push_back(lf);
  }
  for (const LayerFlops& lf : r.layers) {
    r.dense_inference += lf.dense_forward;
    r.inference += lf.forward;
    r.dense_train += 3.0 * lf.dense_forward;
    r.train += 3.0 * lf.forward;
  }
  return r;
}

}  // namespace pattrain
