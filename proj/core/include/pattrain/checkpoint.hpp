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

#ifndef PATTRAIN_CHECKPOINT_HPP_
#define PATTRAIN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pattrain/config.hpp"
#include "pattrain/finalizer.hpp"
#include "pattrain/importance.hpp"
#include "pattrain/metrics.hpp"
#include "pattrain/model.hpp"
#include "pattrain/pattern.hpp"
#include "pattrain/sparse_exec.hpp"
#include "pattrain/sparsity_plan.hpp"

namespace pattrain {

enum class Stage : std::uint8_t {
  kWarmup = 1,
  kPatternGen = 2,
  kFinalize = 3,
  kRegularize = 4,
  kMasked = 5,
};
std::string to_string(Stage s);

// Everything beyond the weights that the next epoch depends on.
struct TrainState {
  int epochs_done = 0;
  Stage stage = Stage::kWarmup;
  int stage_begin = 0;  // first epoch of the current stage
  LossHistory history;
  std::optional<double> prev_batch_loss;
  CandidatePool candidates;
  std::optional<PatternPool> pool;
  std::optional<OccurrenceTable> occurrence;
  std::optional<SparsityPlan> plan;
  int hard_prune_epoch = -1;  // first masked epoch, -1 before hard prune
  double cum_train_flops = 0.0;
  double cum_dense_train_flops = 0.0;
  std::vector<MetricsRow> metrics;

  bool hard_pruned() const { return hard_prune_epoch >= 0; }
  bool operator==(const TrainState&) const = default;
};

struct Checkpoint {
  PipelineConfig config;
  Model model;
  TrainState state;
  // Per conv layer; null for layers without an index. Rebuilt from the plan
  // on load and compared against the stored arrays.
  std::vector<std::shared_ptr<const SparsityIndex>> indices;
};

// Binary layout: 8-byte magic "PTRNCKPT", u32 format version, then tagged
// sections (4-byte tag, u64 length, payload). Integers and doubles are
// little-endian; doubles are stored as their IEEE-754 bit patterns.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
/// Throws ParseError on corrupt input and IntegrityError when the stored
/// indices or config hash disagree with what they are derived from.
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

/// Writes to a temporary sibling, then renames over `path`.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pattrain

#endif  // PATTRAIN_CHECKPOINT_HPP_
