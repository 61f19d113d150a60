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

#include "pattrain/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

#include "pattrain/error.hpp"

namespace pattrain {

FeatureMap Dataset::batch(std::span<const std::size_t> indices) const {
  if (indices.empty()) throw ShapeError("empty batch");
  const std::size_t n = image_size();
  std::vector<double> out(indices.size() * n);
  for (std::size_t b = 0; b < indices.size(); ++b) {
    if (indices[b] >= size()) throw ShapeError("batch index out of range");
    std::copy_n(images.begin() + static_cast<std::ptrdiff_t>(indices[b] * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(b * n));
  }
  return FeatureMap(Shape4{static_cast<int>(indices.size()), channels, height, width},
                    std::move(out));
}

std::vector<std::uint8_t> Dataset::batch_labels(std::span<const std::size_t> indices) const {
  std::vector<std::uint8_t> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(labels.at(i));
  return out;
}

Dataset Dataset::head(std::size_t n) const {
  n = std::min(n, size());
  Dataset d = *this;
  d.images.resize(n * image_size());
  d.labels.resize(n);
  return d;
}

namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

constexpr std::uint8_t kUnsignedByte = 0x08;

}  // namespace

IdxArray parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError("idx: file shorter than the magic number");
  if (bytes[0] != 0 || bytes[1] != 0) throw ParseError("idx: bad magic");
  if (bytes[2] != kUnsignedByte) throw ParseError("idx: only unsigned-byte payloads are supported");
  const int rank = bytes[3];
  if (rank < 1) throw ParseError("idx: rank must be at least 1");
  const std::size_t header = 4 + 4 * static_cast<std::size_t>(rank);
  if (bytes.size() < header) throw ParseError("idx: truncated header");
  IdxArray out;
  std::size_t count = 1;
  for (int i = 0; i < rank; ++i) {
    out.dims.push_back(read_be32(bytes, 4 + 4 * static_cast<std::size_t>(i)));
    count *= out.dims.back();
  }
  if (bytes.size() - header < count) {
    throw ParseError("idx: truncated payload, expected " + std::to_string(count) + " bytes");
  }
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header),
                  bytes.begin() + static_cast<std::ptrdiff_t>(header + count));
  return out;
}

IdxArray read_idx(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("idx: cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  try {
    return parse_idx(bytes);
  } catch (const ParseError& e) {
    throw ParseError(std::string(e.what()) + " (" + path.string() + ")");
  }
}

void write_idx(const std::filesystem::path& path, const IdxArray& array) {
  std::size_t count = 1;
  for (auto d : array.dims) count *= d;
  if (array.dims.empty() || array.dims.size() > 255 || count != array.data.size()) {
    throw ShapeError("idx: dims do not match payload");
  }
  std::vector<std::uint8_t> out{0, 0, kUnsignedByte, static_cast<std::uint8_t>(array.dims.size())};
  for (auto d : array.dims) put_be32(out, d);
  out.insert(out.end(), array.data.begin(), array.data.end());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("idx: cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const IdxArray img = read_idx(images);
  const IdxArray lab = read_idx(labels);
  if (img.dims.size() != 3 && img.dims.size() != 4) {
    throw ParseError("idx: images must be rank 3 (N,H,W) or 4 (N,C,H,W)");
  }
  if (lab.dims.size() != 1) throw ParseError("idx: labels must be rank 1");
  if (lab.dims[0] != img.dims[0]) throw ParseError("idx: image and label counts differ");
  Dataset d;
  const bool has_c = img.dims.size() == 4;
  d.channels = has_c ? static_cast<int>(img.dims[1]) : 1;
  d.height = static_cast<int>(img.dims[has_c ? 2 : 1]);
  d.width = static_cast<int>(img.dims[has_c ? 3 : 2]);
  d.images.resize(img.data.size());
  std::transform(img.data.begin(), img.data.end(), d.images.begin(),
                 [](std::uint8_t v) { return v / 255.0; });
  d.labels = lab.data;
  int max_label = 0;
  for (auto v : d.labels) max_label = std::max<int>(max_label, v);
  d.classes = max_label + 1;
  return d;
}

Dataset make_synthetic(std::size_t samples, int classes, int side, std::uint64_t seed) {
  if (classes < 2 || side < 4 || samples == 0) throw ConfigError("synthetic: bad parameters");
  Dataset d;
  d.channels = 1;
  d.height = side;
  d.width = side;
  d.classes = classes;
  d.images.resize(samples * d.image_size());
  d.labels.resize(samples);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 0.3);
  for (std::size_t i = 0; i < samples; ++i) {
    const int label = static_cast<int>(i % static_cast<std::size_t>(classes));
    d.labels[i] = static_cast<std::uint8_t>(label);
    double* img = d.images.data() + i * d.image_size();
    for (int y = 0; y < side; ++y) {
      for (int x = 0; x < side; ++x) {
        // Class k draws a bar at angle k * 180 / classes through the centre.
        const double angle = 3.141592653589793 * label / classes;
        const double dx = x - (side - 1) / 2.0;
        const double dy = y - (side - 1) / 2.0;
        const double dist = std::abs(dx * std::sin(angle) - dy * std::cos(angle));
        const double bar = dist < 1.5 ? 0.7 : 0.0;
        img[y * side + x] = std::min(1.0, bar + noise(rng));
      }
    }
  }
  return d;
}

}  // namespace pattrain
