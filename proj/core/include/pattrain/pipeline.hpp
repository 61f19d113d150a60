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

#ifndef PATTRAIN_PIPELINE_HPP_
#define PATTRAIN_PIPELINE_HPP_

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "pattrain/checkpoint.hpp"
#include "pattrain/comm_sim.hpp"
#include "pattrain/config.hpp"
#include "pattrain/dataset.hpp"
#include "pattrain/model.hpp"
#include "pattrain/sparse_exec.hpp"

namespace pattrain {

struct DataBundle {
  Dataset train;
  Dataset test;
};

/// Loads (or synthesises) the datasets a config names, honouring the limits.
DataBundle load_data(const PipelineConfig& cfg);

/// Passed to the step hook after every optimiser step.
struct StepInfo {
  int epoch = 0;
  std::size_t batch = 0;
  Stage stage = Stage::kWarmup;
  const Model* model = nullptr;
  const TrainState* state = nullptr;
};
using StepHook = std::function<void(const StepInfo&)>;

struct TrainerOptions {
  bool comm_sim = true;        // false: use worker gradients directly (W must be 1)
  bool write_outputs = true;   // metrics.csv, timing.csv, checkpoint.bin under out_dir
};

/// Runs the five-stage schedule one epoch at a time.
class Trainer {
 public:
  Trainer(PipelineConfig cfg, DataBundle data, TrainerOptions opts = {});
  /// Continues a run from a checkpoint; the config is the checkpoint's.
  Trainer(Checkpoint ckpt, DataBundle data, TrainerOptions opts = {});

  void set_step_hook(StepHook hook) { hook_ = std::move(hook); }

  bool finished() const { return state_.epochs_done >= cfg_.total_epochs; }
  void run_epoch();
  /// Runs until finished, or until `stop_after` epochs are done.
  void run(std::optional<int> stop_after = std::nullopt);

  /// Test-set accuracy with the current execution path.
  double evaluate() const;

  const PipelineConfig& config() const { return cfg_; }
  const Model& model() const { return model_; }
  const TrainState& state() const { return state_; }
  const DataBundle& data() const { return data_; }
  const LayerExecPlan* exec_plan() const { return exec_ ? &*exec_ : nullptr; }
  const std::vector<std::shared_ptr<const SparsityIndex>>& indices() const { return indices_; }
  const SparseRuntime* sparse_runtime() const;
  const ReduceReport& last_report() const { return last_report_; }
  const std::vector<TimingRow>& timing() const { return timing_; }

  Checkpoint checkpoint() const;
  void write_outputs() const;

 private:
  struct StepResult {
    double loss_sum = 0.0;  // summed over samples
    int correct = 0;
    Gradients grads;
  };

  void init_derived();
  StepResult compute_step(std::span<const std::size_t> idx, ReduceReport* report);
  void apply_update(const Gradients& g, double lr, std::vector<Tensor4>* reg);
  void freeze_plan();
  void hard_prune_all();
  void end_of_epoch(double epoch_loss);
  double lr_at(int epoch) const;
  std::vector<std::size_t> epoch_order(int epoch) const;

  PipelineConfig cfg_;
  TrainerOptions opts_;
  DataBundle data_;
  Model model_;
  TrainState state_;
  std::optional<LayerExecPlan> exec_;
  std::vector<std::shared_ptr<const SparsityIndex>> indices_;
  SparseRuntime runtime_;
  std::vector<Tensor4> last_conv_grads_;
  ReduceReport last_report_;
  std::vector<TimingRow> timing_;
  StepHook hook_;
};

struct RunResult {
  std::filesystem::path checkpoint;
  std::filesystem::path metrics;
  double test_acc = 0.0;
  double compression_ratio = 1.0;
  std::vector<MetricsRow> rows;
};

/// Full run; writes metrics.csv, timing.csv and checkpoint.bin into cfg.out_dir.
RunResult run_pipeline(const PipelineConfig& cfg, TrainerOptions opts = {});
RunResult resume_pipeline(const std::filesystem::path& checkpoint,
                          std::optional<std::filesystem::path> out_dir = std::nullopt);

}  // namespace pattrain

#endif  // PATTRAIN_PIPELINE_HPP_
