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

#include "pattrain/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pattrain/gemm.hpp"

namespace pattrain {

void LayerParams::validate() const {
  if (bias.size() != static_cast<std::size_t>(filters())) {
    throw ShapeError("bias length " + std::to_string(bias.size()) + " != filter count " +
                     std::to_string(filters()));
  }
  if (stride < 1) throw ShapeError("stride must be positive");
  if (padding < 0) throw ShapeError("padding must be non-negative");
}

ConvGeometry conv_geometry(const Shape4& input, int kernel_h, int kernel_w, int stride,
                           int padding) {
  ConvGeometry g;
  const int span_h = input.d2 + 2 * padding - kernel_h;
  const int span_w = input.d3 + 2 * padding - kernel_w;
  if (span_h < 0 || span_w < 0 || stride < 1) {
    throw ShapeError("convolution output is empty for input " + input.str());
  }
  g.out_h = span_h / stride + 1;
  g.out_w = span_w / stride + 1;
  return g;
}

Matrix im2col(const FeatureMap& input, int kernel_h, int kernel_w, int stride, int padding) {
  const Shape4& s = input.shape();
  const ConvGeometry g = conv_geometry(s, kernel_h, kernel_w, stride, padding);
  const int plane = g.out_h * g.out_w;
  Matrix cols(s.d1 * kernel_h * kernel_w, s.d0 * plane);
  for (int c = 0; c < s.d1; ++c) {
    for (int kh = 0; kh < kernel_h; ++kh) {
      for (int kw = 0; kw < kernel_w; ++kw) {
        double* row = cols.row((c * kernel_h + kh) * kernel_w + kw).data();
        for (int b = 0; b < s.d0; ++b) {
          const double* src = input.slice(b, c).data();
          double* dst = row + static_cast<std::size_t>(b) * plane;
          for (int oh = 0; oh < g.out_h; ++oh) {
            const int ih = oh * stride - padding + kh;
            if (ih < 0 || ih >= s.d2) {
              std::fill(dst + oh * g.out_w, dst + (oh + 1) * g.out_w, 0.0);
              continue;
            }
            for (int ow = 0; ow < g.out_w; ++ow) {
              const int iw = ow * stride - padding + kw;
              dst[oh * g.out_w + ow] = (iw < 0 || iw >= s.d3) ? 0.0 : src[ih * s.d3 + iw];
            }
          }
        }
      }
    }
  }
  return cols;
}

FeatureMap col2im(const Matrix& cols, const Shape4& input_shape, int kernel_h, int kernel_w,
                  int stride, int padding) {
  const ConvGeometry g = conv_geometry(input_shape, kernel_h, kernel_w, stride, padding);
  const int plane = g.out_h * g.out_w;
  if (cols.rows() != input_shape.d1 * kernel_h * kernel_w || cols.cols() != input_shape.d0 * plane) {
    throw ShapeError("col2im: column matrix does not match input " + input_shape.str());
  }
  FeatureMap out(input_shape);
  for (int c = 0; c < input_shape.d1; ++c) {
    for (int kh = 0; kh < kernel_h; ++kh) {
      for (int kw = 0; kw < kernel_w; ++kw) {
        const double* row = cols.row((c * kernel_h + kh) * kernel_w + kw).data();
        for (int b = 0; b < input_shape.d0; ++b) {
          double* dst = out.slice(b, c).data();
          const double* src = row + static_cast<std::size_t>(b) * plane;
          for (int oh = 0; oh < g.out_h; ++oh) {
            const int ih = oh * stride - padding + kh;
            if (ih < 0 || ih >= input_shape.d2) continue;
            for (int ow = 0; ow < g.out_w; ++ow) {
              const int iw = ow * stride - padding + kw;
              if (iw >= 0 && iw < input_shape.d3) dst[ih * input_shape.d3 + iw] += src[oh * g.out_w + ow];
            }
          }
        }
      }
    }
  }
  return out;
}

FeatureMap conv_output_from_product(const Matrix& product, std::span<const double> bias,
                                    int batch, const ConvGeometry& geom) {
  const int plane = geom.out_h * geom.out_w;
  if (product.cols() != batch * plane || bias.size() != static_cast<std::size_t>(product.rows())) {
    throw ShapeError("conv output reshape: product/bias mismatch");
  }
  FeatureMap out(batch, product.rows(), geom.out_h, geom.out_w);
  for (int b = 0; b < batch; ++b) {
    for (int f = 0; f < product.rows(); ++f) {
      const double* src = product.row(f).data() + static_cast<std::size_t>(b) * plane;
      double* dst = out.slice(b, f).data();
      const double bf = bias[f];
      for (int p = 0; p < plane; ++p) dst[p] = src[p] + bf;
    }
  }
  return out;
}

Matrix channel_major(const FeatureMap& map) {
  const Shape4& s = map.shape();
  const int plane = s.d2 * s.d3;
  Matrix m(s.d1, s.d0 * plane);
  for (int b = 0; b < s.d0; ++b) {
    for (int f = 0; f < s.d1; ++f) {
      const auto src = map.slice(b, f);
      std::copy(src.begin(), src.end(), m.row(f).begin() + static_cast<std::ptrdiff_t>(b) * plane);
    }
  }
  return m;
}

namespace {

void check_conv_input(const Shape4& input, const LayerParams& layer) {
  layer.validate();
  if (input.d1 != layer.channels()) {
    throw ShapeError("conv: input has " + std::to_string(input.d1) + " channels, weights expect " +
                     std::to_string(layer.channels()));
  }
}

}  // namespace

FeatureMap conv_forward(const FeatureMap& input, const LayerParams& layer) {
  check_conv_input(input.shape(), layer);
  const ConvGeometry g = conv_geometry(input.shape(), layer.kernel_h(), layer.kernel_w(),
                                       layer.stride, layer.padding);
  const Matrix cols = im2col(input, layer.kernel_h(), layer.kernel_w(), layer.stride, layer.padding);
  return conv_forward_cols(cols, input.shape().d0, g, layer);
}

FeatureMap conv_forward_cols(const Matrix& cols, int batch, const ConvGeometry& geom,
                             const LayerParams& layer) {
  layer.validate();
  const int k = layer.channels() * layer.kernel_h() * layer.kernel_w();
  if (cols.rows() != k || cols.cols() != batch * geom.out_h * geom.out_w) {
    throw ShapeError("conv: im2col matrix does not match layer");
  }
  Matrix product(layer.filters(), cols.cols());
  gemm(Trans::kNo, Trans::kNo, layer.filters(), cols.cols(), k, 1.0, layer.weights.data(),
       cols.data(), 0.0, product.data());
  return conv_output_from_product(product, layer.bias, batch, geom);
}

ConvGrads conv_backward(const FeatureMap& delta_out, const FeatureMap& input,
                        const LayerParams& layer, bool need_delta_in) {
  check_conv_input(input.shape(), layer);
  const Matrix cols = im2col(input, layer.kernel_h(), layer.kernel_w(), layer.stride, layer.padding);
  return conv_backward_cols(delta_out, cols, input.shape(), layer, need_delta_in);
}

ConvGrads conv_backward_cols(const FeatureMap& delta_out, const Matrix& cols,
                             const Shape4& input_shape, const LayerParams& layer,
                             bool need_delta_in) {
  check_conv_input(input_shape, layer);
  const ConvGeometry g = conv_geometry(input_shape, layer.kernel_h(), layer.kernel_w(),
                                       layer.stride, layer.padding);
  const Shape4& ds = delta_out.shape();
  if (ds.d0 != input_shape.d0 || ds.d1 != layer.filters() || ds.d2 != g.out_h || ds.d3 != g.out_w) {
    throw ShapeError("conv_backward: delta " + ds.str() + " inconsistent with forward pass");
  }
  const int f = layer.filters();
  const int k = cols.rows();
  const int n = cols.cols();
  const Matrix dy = channel_major(delta_out);

  ConvGrads grads;
  grads.weight_grad = Tensor4(layer.weights.shape());
  gemm(Trans::kNo, Trans::kYes, f, k, n, 1.0, dy.data(), cols.data(), 0.0,
       grads.weight_grad.data());
  grads.bias_grad.assign(f, 0.0);
  for (int i = 0; i < f; ++i) {
    double acc = 0.0;
    for (double v : dy.row(i)) acc += v;
    grads.bias_grad[i] = acc;
  }
  if (need_delta_in) {
    Matrix dcols(k, n);
    gemm(Trans::kYes, Trans::kNo, k, n, f, 1.0, layer.weights.data(), dy.data(), 0.0,
         dcols.data());
    grads.delta_in = col2im(dcols, input_shape, layer.kernel_h(), layer.kernel_w(), layer.stride,
                            layer.padding);
  }
  return grads;
}

FeatureMap relu_forward(const FeatureMap& input) {
  FeatureMap out = input;
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return out;
}

FeatureMap relu_backward(const FeatureMap& delta, const FeatureMap& output) {
  if (delta.shape() != output.shape()) throw ShapeError("relu_backward: shape mismatch");
  FeatureMap out = delta;
  auto o = output.data();
  auto d = out.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!(o[i] > 0.0)) d[i] = 0.0;
  }
  return out;
}

PoolResult maxpool2x2_forward(const FeatureMap& input) {
  const Shape4& s = input.shape();
  const int oh = s.d2 / 2;
  const int ow = s.d3 / 2;
  if (oh < 1 || ow < 1) throw ShapeError("maxpool2x2: input too small " + s.str());
  PoolResult r{FeatureMap(s.d0, s.d1, oh, ow), {}};
  r.argmax.resize(r.output.size());
  std::size_t o = 0;
  for (int b = 0; b < s.d0; ++b) {
    for (int c = 0; c < s.d1; ++c) {
      const std::size_t base = input.offset(b, c, 0, 0);
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j, ++o) {
          std::size_t best = base + static_cast<std::size_t>(2 * i) * s.d3 + 2 * j;
          double best_v = input[best];
          for (int di = 0; di < 2; ++di) {
            for (int dj = 0; dj < 2; ++dj) {
              const std::size_t idx = base + static_cast<std::size_t>(2 * i + di) * s.d3 + 2 * j + dj;
              if (input[idx] > best_v) {
                best_v = input[idx];
                best = idx;
              }
            }
          }
          r.output[o] = best_v;
          r.argmax[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return r;
}

FeatureMap maxpool2x2_backward(const FeatureMap& delta, std::span<const std::uint32_t> argmax,
                               const Shape4& input_shape) {
  if (argmax.size() != delta.size()) throw ShapeError("maxpool2x2_backward: argmax size mismatch");
  FeatureMap out(input_shape);
  for (std::size_t i = 0; i < argmax.size(); ++i) {
    if (argmax[i] >= out.size()) throw ShapeError("maxpool2x2_backward: argmax out of range");
    out[argmax[i]] += delta[i];
  }
  return out;
}

Matrix fc_forward(const Matrix& input, const FcParams& layer) {
  const int out_dim = layer.weights.rows();
  const int in_dim = layer.weights.cols();
  if (input.cols() != in_dim) throw ShapeError("fc_forward: input width mismatch");
  if (layer.bias.size() != static_cast<std::size_t>(out_dim)) throw ShapeError("fc_forward: bias");
  Matrix out(input.rows(), out_dim);
  gemm(Trans::kNo, Trans::kYes, input.rows(), out_dim, in_dim, 1.0, input.data(),
       layer.weights.data(), 0.0, out.data());
  for (int b = 0; b < input.rows(); ++b) {
    auto row = out.row(b);
    for (int o = 0; o < out_dim; ++o) row[o] += layer.bias[o];
  }
  return out;
}

FcGrads fc_backward(const Matrix& delta_out, const Matrix& input, const FcParams& layer) {
  const int out_dim = layer.weights.rows();
  const int in_dim = layer.weights.cols();
  const int batch = input.rows();
  if (delta_out.rows() != batch || delta_out.cols() != out_dim || input.cols() != in_dim) {
    throw ShapeError("fc_backward: shape mismatch");
  }
  FcGrads g{Matrix(batch, in_dim), Matrix(out_dim, in_dim), std::vector<double>(out_dim, 0.0)};
  gemm(Trans::kYes, Trans::kNo, out_dim, in_dim, batch, 1.0, delta_out.data(), input.data(), 0.0,
       g.weight_grad.data());
  gemm(Trans::kNo, Trans::kNo, batch, in_dim, out_dim, 1.0, delta_out.data(),
       layer.weights.data(), 0.0, g.delta_in.data());
  for (int b = 0; b < batch; ++b) {
    auto row = delta_out.row(b);
    for (int o = 0; o < out_dim; ++o) g.bias_grad[o] += row[o];
  }
  return g;
}

LossResult softmax_xent_loss(const Matrix& logits, std::span<const std::uint8_t> labels) {
  const int batch = logits.rows();
  const int classes = logits.cols();
  if (labels.size() != static_cast<std::size_t>(batch)) {
    throw ShapeError("softmax_xent_loss: label count mismatch");
  }
  if (batch == 0) throw ShapeError("softmax_xent_loss: empty batch");
  LossResult r{0.0, Matrix(batch, classes), 0};
  const double inv_batch = 1.0 / batch;
  for (int b = 0; b < batch; ++b) {
    const auto z = logits.row(b);
    const int y = labels[b];
    if (y >= classes) throw ShapeError("softmax_xent_loss: label out of range");
    const auto top = std::max_element(z.begin(), z.end());
    if (top - z.begin() == y) ++r.correct;
    const double m = *top;
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    const double log_sum = std::log(sum);
    r.loss += (log_sum - (z[y] - m)) * inv_batch;
    auto d = r.dlogits.row(b);
    for (int c = 0; c < classes; ++c) {
      const double p = std::exp(z[c] - m - log_sum);
      d[c] = (p - (c == y ? 1.0 : 0.0)) * inv_batch;
    }
  }
  return r;
}

void sgd_step(std::span<double> params, std::span<const double> grads, double lr,
              std::span<const double> reg) {
  if (grads.size() != params.size() || (!reg.empty() && reg.size() != params.size())) {
    throw ShapeError("sgd_step: params/grads/reg size mismatch");
  }
  if (!(lr > 0.0)) throw ConfigError("sgd_step: learning rate must be positive");
  if (reg.empty()) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
  } else {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * (grads[i] + reg[i]);
  }
}

}  // namespace pattrain
