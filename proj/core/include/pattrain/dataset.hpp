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

#ifndef PATTRAIN_DATASET_HPP_
#define PATTRAIN_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pattrain/tensor.hpp"

namespace pattrain {

/// Images in [0, 1], NCHW, with one uint8 label per image.
struct Dataset {
  int channels = 1;
  int height = 0;
  int width = 0;
  int classes = 0;
  std::vector<double> images;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t image_size() const {
    return static_cast<std::size_t>(channels) * height * width;
  }
  Shape4 sample_shape() const { return Shape4{1, channels, height, width}; }
  FeatureMap batch(std::span<const std::size_t> indices) const;
  std::vector<std::uint8_t> batch_labels(std::span<const std::size_t> indices) const;
  /// First `n` samples.
  Dataset head(std::size_t n) const;
};

/// Raw IDX tensor: unsigned-byte payload only.
struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::vector<std::uint8_t> data;
};

/// Throws ParseError on bad magic, unsupported type or a truncated payload.
IdxArray read_idx(const std::filesystem::path& path);
IdxArray parse_idx(std::span<const std::uint8_t> bytes);
void write_idx(const std::filesystem::path& path, const IdxArray& array);

Dataset load_idx_dataset(const std::filesystem::path& images, const std::filesystem::path& labels);

/// Two-or-more-class toy images: each class lights a different quadrant-ish
/// stripe, plus uniform noise. Deterministic in `seed`.
Dataset make_synthetic(std::size_t samples, int classes, int side, std::uint64_t seed);

}  // namespace pattrain

#endif  // PATTRAIN_DATASET_HPP_
