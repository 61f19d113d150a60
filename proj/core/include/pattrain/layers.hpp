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

// Dense layer kernels: im2col convolution, ReLU, 2x2 max pooling, fully
// connected, softmax cross-entropy and the SGD update. All in double.

#ifndef PATTRAIN_LAYERS_HPP_
#define PATTRAIN_LAYERS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "pattrain/tensor.hpp"

namespace pattrain {

/// Parameters of one convolution layer; ReLU is applied by a separate layer.
struct LayerParams {
  Tensor4 weights;
  std::vector<double> bias;
  int stride = 1;
  int padding = 0;

  int filters() const { return weights.shape().d0; }
  int channels() const { return weights.shape().d1; }
  int kernel_h() const { return weights.shape().d2; }
  int kernel_w() const { return weights.shape().d3; }
  /// Validates bias length, stride and padding.
  void validate() const;
};

struct ConvGeometry {
  int out_h = 0;
  int out_w = 0;
};

ConvGeometry conv_geometry(const Shape4& input, int kernel_h, int kernel_w, int stride,
                           int padding);

// Lowers the input to a (C*H*S) x (batch*outH*outW) matrix. Row index is
// c*H*S + kh*S + kw, column index is b*outH*outW + oh*outW + ow.
Matrix im2col(const FeatureMap& input, int kernel_h, int kernel_w, int stride, int padding);

/// Adjoint of im2col: scatters-and-adds columns back into an input-shaped map.
FeatureMap col2im(const Matrix& cols, const Shape4& input_shape, int kernel_h, int kernel_w,
                  int stride, int padding);

/// (F x batch*P) GEMM output plus bias, reshaped to (batch, F, outH, outW).
FeatureMap conv_output_from_product(const Matrix& product, std::span<const double> bias,
                                    int batch, const ConvGeometry& geom);

/// (batch, F, outH, outW) -> (F x batch*P), the layout the GEMMs consume.
Matrix channel_major(const FeatureMap& map);

FeatureMap conv_forward(const FeatureMap& input, const LayerParams& layer);
/// Same as above with a precomputed im2col matrix of `input`.
FeatureMap conv_forward_cols(const Matrix& cols, int batch, const ConvGeometry& geom,
                             const LayerParams& layer);

struct ConvGrads {
  FeatureMap delta_in;  // empty when not requested
  Tensor4 weight_grad;
  std::vector<double> bias_grad;
};

ConvGrads conv_backward(const FeatureMap& delta_out, const FeatureMap& input,
                        const LayerParams& layer, bool need_delta_in = true);
ConvGrads conv_backward_cols(const FeatureMap& delta_out, const Matrix& cols,
                             const Shape4& input_shape, const LayerParams& layer,
                             bool need_delta_in = true);

FeatureMap relu_forward(const FeatureMap& input);
/// Gates `delta` by (output > 0); `output` is the forward result.
FeatureMap relu_backward(const FeatureMap& delta, const FeatureMap& output);

struct PoolResult {
  FeatureMap output;
  std::vector<std::uint32_t> argmax;  // flat input offset per output element
};

// 2x2 window, stride 2. Odd trailing rows/cols are dropped (floor). Ties go to
// the first element in row-major window order.
PoolResult maxpool2x2_forward(const FeatureMap& input);
FeatureMap maxpool2x2_backward(const FeatureMap& delta, std::span<const std::uint32_t> argmax,
                               const Shape4& input_shape);

struct FcParams {
  Matrix weights;  // out x in
  std::vector<double> bias;
};

/// input is batch x in (a flattened feature map), result batch x out.
Matrix fc_forward(const Matrix& input, const FcParams& layer);

struct FcGrads {
  Matrix delta_in;
  Matrix weight_grad;
  std::vector<double> bias_grad;
};
FcGrads fc_backward(const Matrix& delta_out, const Matrix& input, const FcParams& layer);

struct LossResult {
  double loss = 0.0;        // mean over the batch
  Matrix dlogits;           // gradient of the mean loss
  int correct = 0;          // argmax hits
};

LossResult softmax_xent_loss(const Matrix& logits, std::span<const std::uint8_t> labels);

// w <- w - lr * (g + r). An empty `reg` means r = 0.
void sgd_step(std::span<double> params, std::span<const double> grads, double lr,
              std::span<const double> reg = {});

}  // namespace pattrain

#endif  // PATTRAIN_LAYERS_HPP_
