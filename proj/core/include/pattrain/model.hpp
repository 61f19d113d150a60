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

#ifndef PATTRAIN_MODEL_HPP_
#define PATTRAIN_MODEL_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pattrain/layers.hpp"
#include "pattrain/sparse_exec.hpp"
#include "pattrain/tensor.hpp"

namespace pattrain {

enum class LayerKind : std::uint8_t { kConv, kRelu, kMaxPool, kFc };

struct ArchLayer {
  LayerKind kind = LayerKind::kConv;
  int units = 0;  // filters for conv, outputs for fc
  int kernel = 3;
  int padding = 0;
  int stride = 1;
};

// Architecture strings are comma-separated tokens:
//   c<F>[k<K>][p<P>][s<S>]  conv with F filters (default 3x3, pad 0, stride 1)
//   r                       ReLU
//   m                       2x2 max pool
//   f<N>                    fully connected with N outputs
// "lenet" and "vgg6" are presets.
std::vector<ArchLayer> parse_arch(const std::string& arch);

/// Sequential CNN. Parameters live in per-kind arrays; layers() gives order.
class Model {
 public:
  struct Layer {
    LayerKind kind;
    std::size_t param;  // index into convs or fcs, unused otherwise
  };

  Model() = default;
  /// He-initialised model; `sample` is (1, C, H, W). The last layer must be fc.
  static Model build(const std::string& arch, const Shape4& sample, int classes,
                     std::uint64_t seed);

  const std::string& arch() const { return arch_; }
  const Shape4& sample_shape() const { return sample_; }
  int classes() const { return classes_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::size_t conv_count() const { return convs_.size(); }
  LayerParams& conv(std::size_t i) { return convs_.at(i); }
  const LayerParams& conv(std::size_t i) const { return convs_.at(i); }
  std::size_t fc_count() const { return fcs_.size(); }
  FcParams& fc(std::size_t i) { return fcs_.at(i); }
  const FcParams& fc(std::size_t i) const { return fcs_.at(i); }

  std::vector<Shape4> conv_weight_shapes() const;
  /// Activation shape entering every layer for a batch of one.
  std::vector<Shape4> layer_input_shapes() const;
  std::size_t parameter_count() const;

  bool operator==(const Model& other) const;

 private:
  std::string arch_;
  Shape4 sample_{};
  int classes_ = 0;
  std::vector<Layer> layers_;
  std::vector<LayerParams> convs_;
  std::vector<FcParams> fcs_;
};

/// Frozen sparse operator state: a non-null index routes that conv through SpMM.
struct SparseRuntime {
  std::vector<std::shared_ptr<const SparsityIndex>> index;  // per conv layer
  bool active(std::size_t conv) const { return conv < index.size() && index[conv] != nullptr; }
};

/// Activations kept from forward for backward. One per worker.
struct ForwardCache {
  struct Entry {
    Shape4 input_shape{};
    Matrix cols;                 // conv: im2col of the input
    ConvGeometry geom{};
    std::optional<PatternCSR> csr;  // conv on the sparse path
    FeatureMap output;           // relu: forward result
    std::vector<std::uint32_t> argmax;  // pool
    Matrix fc_input;             // fc
  };
  std::vector<Entry> entries;
};

struct Gradients {
  std::vector<Tensor4> conv_weight;
  std::vector<std::vector<double>> conv_bias;
  std::vector<Matrix> fc_weight;
  std::vector<std::vector<double>> fc_bias;
};

/// Logits (batch x classes).
Matrix forward(const Model& model, const FeatureMap& input, ForwardCache* cache,
               const SparseRuntime* sparse = nullptr);

Gradients backward(const Model& model, const ForwardCache& cache, const Matrix& dlogits,
                   const SparseRuntime* sparse = nullptr);

}  // namespace pattrain

#endif  // PATTRAIN_MODEL_HPP_
