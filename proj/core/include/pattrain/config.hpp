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

#ifndef PATTRAIN_CONFIG_HPP_
#define PATTRAIN_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pattrain/finalizer.hpp"

namespace pattrain {

// Flat key=value run configuration. Unknown keys are an error.
struct PipelineConfig {
  // model and data
  std::string arch = "lenet";
  std::string dataset = "idx";  // idx | synthetic
  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::size_t train_limit = 0;  // 0 = all samples
  std::size_t test_limit = 0;
  std::size_t synthetic_samples = 200;
  int synthetic_classes = 2;
  int synthetic_side = 16;

  // optimisation
  double lr = 0.1;
  int lr_decay_every = 0;  // 0 disables step decay
  double lr_decay_factor = 0.1;
  int batch_size = 128;
  std::uint64_t seed = 1;
  int workers = 1;

  // stage control
  int total_epochs = 190;
  int trigger_window = 5;
  double start_threshold = 0.027;
  int dppg_epochs = 10;
  int finalize_epochs = 10;
  int hard_prune_epoch = 95;
  int min_reg_epochs = 1;
  bool no_prune = false;

  // pruning
  int pool_size = 12;
  double prune_fraction = 0.25;
  bool exempt_first_conv = true;
  SpikeRule spike_rule = SpikeRule::kRelativeIncrease;
  double delta_spike = 0.1;
  double delta_literal = 0.0018;
  double lambda_pattern = 0.00025;
  double lambda_kernel = 0.00025;

  // execution
  double sparsity_threshold = 0.65;
  std::vector<double> layer_thresholds;  // per conv layer; empty = sparsity_threshold
  std::size_t tile_budget = 32 * 1024;

  std::string out_dir = "run";

  /// Throws ConfigError on any out-of-range value.
  void validate() const;
  /// Sets one key from its text form; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Canonical key=value lines for every field that affects results (not out_dir).
  std::string canonical() const;
  std::uint64_t hash() const;
  std::map<std::string, std::string> to_map() const;
};

PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace pattrain

#endif  // PATTRAIN_CONFIG_HPP_
