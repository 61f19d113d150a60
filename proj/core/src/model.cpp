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

#include "pattrain/model.hpp"

#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include "pattrain/error.hpp"

namespace pattrain {

namespace {

std::string expand_preset(const std::string& arch) {
  if (arch == "lenet") return "c16,r,m,c32,r,m,f";
  if (arch == "vgg6") return "c16p1,r,c16p1,r,m,c32p1,r,c32p1,r,m,c64p1,r,c64p1,r,m,f";
  return arch;
}

// Reads "<letter><int>" suffixes such as k3 or p1 from `rest`.
int take_option(std::string& rest, char key, int fallback) {
  const auto pos = rest.find(key);
  if (pos == std::string::npos) return fallback;
  std::size_t end = pos + 1;
  while (end < rest.size() && std::isdigit(static_cast<unsigned char>(rest[end]))) ++end;
  if (end == pos + 1) throw ConfigError(std::string("arch: option '") + key + "' needs a value");
  const int v = std::stoi(rest.substr(pos + 1, end - pos - 1));
  rest.erase(pos, end - pos);
  return v;
}

int leading_int(std::string& rest, int fallback) {
  std::size_t end = 0;
  while (end < rest.size() && std::isdigit(static_cast<unsigned char>(rest[end]))) ++end;
  if (end == 0) return fallback;
  const int v = std::stoi(rest.substr(0, end));
  rest.erase(0, end);
  return v;
}

}  // namespace

std::vector<ArchLayer> parse_arch(const std::string& arch) {
  std::vector<ArchLayer> out;
  std::stringstream ss(expand_preset(arch));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok.erase(0, tok.find_first_not_of(" \t"));
    tok.erase(tok.find_last_not_of(" \t") + 1);
    if (tok.empty()) throw ConfigError("arch: empty layer token in '" + arch + "'");
    ArchLayer layer;
    std::string rest = tok.substr(1);
    switch (tok[0]) {
      case 'c':
        layer.kind = LayerKind::kConv;
        layer.units = leading_int(rest, 0);
        layer.kernel = take_option(rest, 'k', 3);
        layer.padding = take_option(rest, 'p', 0);
        layer.stride = take_option(rest, 's', 1);
        if (layer.units < 1 || layer.kernel < 1 || layer.stride < 1) {
          throw ConfigError("arch: bad conv token '" + tok + "'");
        }
        break;
      case 'r':
        layer.kind = LayerKind::kRelu;
        break;
      case 'm':
        layer.kind = LayerKind::kMaxPool;
        break;
      case 'f':
        layer.kind = LayerKind::kFc;
        layer.units = leading_int(rest, 0);  // 0 = number of classes
        break;
      default:
        throw ConfigError("arch: unknown layer token '" + tok + "'");
    }
    if (!rest.empty()) throw ConfigError("arch: trailing characters in '" + tok + "'");
    out.push_back(layer);
  }
  if (out.empty()) throw ConfigError("arch: no layers");
  return out;
}

Model Model::build(const std::string& arch, const Shape4& sample, int classes,
                   std::uint64_t seed) {
  if (classes < 2) throw ConfigError("model needs at least two classes");
  Model m;
  m.arch_ = arch;
  m.sample_ = Shape4{1, sample.d1, sample.d2, sample.d3};
  m.classes_ = classes;
  std::mt19937_64 rng(seed);
  Shape4 cur = m.sample_;
  bool flat = false;
  const auto spec = parse_arch(arch);
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const ArchLayer& a = spec[i];
    switch (a.kind) {
      case LayerKind::kConv: {
        if (flat) throw ConfigError("arch: conv after fc");
        LayerParams p;
        p.weights = Tensor4(a.units, cur.d1, a.kernel, a.kernel);
        p.bias.assign(a.units, 0.0);
        p.stride = a.stride;
        p.padding = a.padding;
        const double std_dev = std::sqrt(2.0 / (cur.d1 * a.kernel * a.kernel));
        std::normal_distribution<double> dist(0.0, std_dev);
        for (double& w : p.weights.data()) w = dist(rng);
        const ConvGeometry g = conv_geometry(cur, a.kernel, a.kernel, a.stride, a.padding);
        cur = Shape4{1, a.units, g.out_h, g.out_w};
        m.layers_.push_back({LayerKind::kConv, m.convs_.size()});
        m.convs_.push_back(std::move(p));
        break;
      }
      case LayerKind::kRelu:
        m.layers_.push_back({LayerKind::kRelu, 0});
        break;
      case LayerKind::kMaxPool:
        if (flat) throw ConfigError("arch: pool after fc");
        if (cur.d2 < 2 || cur.d3 < 2) throw ConfigError("arch: pooling a map smaller than 2x2");
        cur = Shape4{1, cur.d1, cur.d2 / 2, cur.d3 / 2};
        m.layers_.push_back({LayerKind::kMaxPool, 0});
        break;
      case LayerKind::kFc: {
        const int in = cur.d1 * cur.d2 * cur.d3;
        const int out = a.units > 0 ? a.units : classes;
        FcParams p{Matrix(out, in), std::vector<double>(out, 0.0)};
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / in));
        for (double& w : p.weights.data()) w = dist(rng);
        cur = Shape4{1, out, 1, 1};
        flat = true;
        m.layers_.push_back({LayerKind::kFc, m.fcs_.size()});
        m.fcs_.push_back(std::move(p));
        break;
      }
    }
  }
  if (m.layers_.back().kind != LayerKind::kFc || cur.d1 != classes) {
    throw ConfigError("arch must end in an fc layer with one output per class");
  }
  return m;
}

std::vector<Shape4> Model::conv_weight_shapes() const {
  std::vector<Shape4> out;
  for (const auto& c : convs_) out.push_back(c.weights.shape());
  return out;
}

std::vector<Shape4> Model::layer_input_shapes() const {
  std::vector<Shape4> out;
  Shape4 cur = sample_;
  for (const Layer& l : layers_) {
    out.push_back(cur);
    switch (l.kind) {
      case LayerKind::kConv: {
        const LayerParams& p = convs_[l.param];
        const ConvGeometry g =
            conv_geometry(cur, p.kernel_h(), p.kernel_w(), p.stride, p.padding);
        cur = Shape4{1, p.filters(), g.out_h, g.out_w};
        break;
      }
      case LayerKind::kRelu:
        break;
      case LayerKind::kMaxPool:
        cur = Shape4{1, cur.d1, cur.d2 / 2, cur.d3 / 2};
        break;
      case LayerKind::kFc:
        cur = Shape4{1, fcs_[l.param].weights.rows(), 1, 1};
        break;
    }
  }
  return out;
}

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& c : convs_) n += c.weights.size() + c.bias.size();
  for (const auto& f : fcs_) n += f.weights.size() + f.bias.size();
  return n;
}

bool Model::operator==(const Model& other) const {
  if (arch_ != other.arch_ || sample_ != other.sample_ || classes_ != other.classes_) return false;
  if (convs_.size() != other.convs_.size() || fcs_.size() != other.fcs_.size()) return false;
  for (std::size_t i = 0; i < convs_.size(); ++i) {
    const auto& a = convs_[i];
    const auto& b = other.convs_[i];
    if (!(a.weights == b.weights) || a.bias != b.bias || a.stride != b.stride ||
        a.padding != b.padding) {
      return false;
    }
  }
  for (std::size_t i = 0; i < fcs_.size(); ++i) {
    if (!(fcs_[i].weights == other.fcs_[i].weights) || fcs_[i].bias != other.fcs_[i].bias) {
      return false;
    }
  }
  return true;
}

Matrix forward(const Model& model, const FeatureMap& input, ForwardCache* cache,
               const SparseRuntime* sparse) {
  const Shape4& s = input.shape();
  const Shape4& want = model.sample_shape();
  if (s.d1 != want.d1 || s.d2 != want.d2 || s.d3 != want.d3) {
    throw ShapeError("forward: input " + s.str() + " does not match model sample " + want.str());
  }
  const int batch = s.d0;
  if (cache) cache->entries.assign(model.layers().size(), {});
  FeatureMap x = input;
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    const Model::Layer& layer = model.layers()[li];
    ForwardCache::Entry scratch;
    ForwardCache::Entry& e = cache ? cache->entries[li] : scratch;
    e.input_shape = x.shape();
    switch (layer.kind) {
      case LayerKind::kConv: {
        const LayerParams& p = model.conv(layer.param);
        if (x.shape().d1 != p.channels()) throw ShapeError("forward: conv channel mismatch");
        e.geom = conv_geometry(x.shape(), p.kernel_h(), p.kernel_w(), p.stride, p.padding);
        e.cols = im2col(x, p.kernel_h(), p.kernel_w(), p.stride, p.padding);
        if (sparse && sparse->active(layer.param)) {
          e.csr = convert2csr(sparse->index[layer.param], p.weights);
          x = sparse_conv_forward_cols(e.cols, batch, e.geom, *e.csr, SparseConvMeta::of(p));
        } else {
          x = conv_forward_cols(e.cols, batch, e.geom, p);
        }
        break;
      }
      case LayerKind::kRelu:
        x = relu_forward(x);
        if (cache) e.output = x;
        break;
      case LayerKind::kMaxPool: {
        PoolResult r = maxpool2x2_forward(x);
        e.argmax = std::move(r.argmax);
        x = std::move(r.output);
        break;
      }
      case LayerKind::kFc: {
        const FcParams& p = model.fc(layer.param);
        const Shape4 in = x.shape();
        e.fc_input = Matrix(batch, in.d1 * in.d2 * in.d3, std::move(x.storage()));
        const Matrix out = fc_forward(e.fc_input, p);
        x = FeatureMap(Shape4{batch, out.cols(), 1, 1},
                       std::vector<double>(out.data().begin(), out.data().end()));
        break;
      }
    }
    if (!cache) e = {};
  }
  const Shape4 out = x.shape();
  return Matrix(batch, out.d1 * out.d2 * out.d3, std::move(x.storage()));
}

Gradients backward(const Model& model, const ForwardCache& cache, const Matrix& dlogits,
                   const SparseRuntime* sparse) {
  if (cache.entries.size() != model.layers().size()) {
    throw StateError("backward: forward cache does not match the model");
  }
  Gradients g;
  g.conv_weight.resize(model.conv_count());
  g.conv_bias.resize(model.conv_count());
  g.fc_weight.resize(model.fc_count());
  g.fc_bias.resize(model.fc_count());

  const int batch = dlogits.rows();
  FeatureMap delta(Shape4{batch, dlogits.cols(), 1, 1},
                   std::vector<double>(dlogits.data().begin(), dlogits.data().end()));
  for (std::size_t li = model.layers().size(); li-- > 0;) {
    const Model::Layer& layer = model.layers()[li];
    const ForwardCache::Entry& e = cache.entries[li];
    const bool need_delta_in = li > 0;
    switch (layer.kind) {
      case LayerKind::kConv: {
        const LayerParams& p = model.conv(layer.param);
        if (e.csr) {
          if (!sparse || !sparse->active(layer.param)) {
            throw StateError("backward: forward ran sparse but no sparse runtime was given");
          }
          SparseConvGrads sg = sparse_conv_backward_cols(delta, e.cols, e.input_shape, *e.csr,
                                                         SparseConvMeta::of(p), need_delta_in);
          g.conv_weight[layer.param] =
              scatter_to_tensor(e.csr->index(), sg.weight_grad, p.weights.shape());
          g.conv_bias[layer.param] = std::move(sg.bias_grad);
          delta = std::move(sg.delta_in);
        } else {
          ConvGrads cg = conv_backward_cols(delta, e.cols, e.input_shape, p, need_delta_in);
          g.conv_weight[layer.param] = std::move(cg.weight_grad);
          g.conv_bias[layer.param] = std::move(cg.bias_grad);
          delta = std::move(cg.delta_in);
        }
        break;
      }
      case LayerKind::kRelu:
        delta = relu_backward(delta, e.output);
        break;
      case LayerKind::kMaxPool:
        delta = maxpool2x2_backward(delta, e.argmax, e.input_shape);
        break;
      case LayerKind::kFc: {
        const FcParams& p = model.fc(layer.param);
        const Shape4 ds = delta.shape();
        const Matrix dout(batch, ds.d1 * ds.d2 * ds.d3, std::move(delta.storage()));
        FcGrads fg = fc_backward(dout, e.fc_input, p);
        g.fc_weight[layer.param] = std::move(fg.weight_grad);
        g.fc_bias[layer.param] = std::move(fg.bias_grad);
        const Shape4& in = e.input_shape;
        delta = FeatureMap(in, std::vector<double>(fg.delta_in.data().begin(),
                                                   fg.delta_in.data().end()));
        break;
      }
    }
  }
  return g;
}

}  // namespace pattrain
