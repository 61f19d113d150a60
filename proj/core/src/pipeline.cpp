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

#include "pattrain/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pattrain/error.hpp"
#include "pattrain/flops.hpp"
#include "pattrain/log.hpp"
#include "pattrain/regularizer.hpp"

namespace pattrain {

namespace {

constexpr std::uint64_t kTrainDataSeed = 1001;
constexpr std::uint64_t kTestDataSeed = 2002;
constexpr int kEvalBatch = 1000;

bool is_3x3(const Shape4& s) { return s.d2 == Pattern::kSide && s.d3 == Pattern::kSide; }

}  // namespace

DataBundle load_data(const PipelineConfig& cfg) {
  DataBundle d;
  if (cfg.dataset == "synthetic") {
    d.train = make_synthetic(cfg.synthetic_samples, cfg.synthetic_classes, cfg.synthetic_side,
                             kTrainDataSeed);
    const std::size_t test_n =
        std::max<std::size_t>(cfg.synthetic_samples / 2, cfg.synthetic_classes);
    d.test = make_synthetic(test_n, cfg.synthetic_classes, cfg.synthetic_side, kTestDataSeed);
  } else {
    d.train = load_idx_dataset(cfg.train_images, cfg.train_labels);
    d.test = load_idx_dataset(cfg.test_images, cfg.test_labels);
  }
  if (cfg.train_limit > 0) d.train = d.train.head(cfg.train_limit);
  if (cfg.test_limit > 0) d.test = d.test.head(cfg.test_limit);
  if (d.train.size() == 0 || d.test.size() == 0) throw ConfigError("empty dataset");
  if (d.train.sample_shape() != d.test.sample_shape()) {
    throw ConfigError("train and test images differ in shape");
  }
  const int classes = std::max(d.train.classes, d.test.classes);
  d.train.classes = d.test.classes = classes;
  return d;
}

Trainer::Trainer(PipelineConfig cfg, DataBundle data, TrainerOptions opts)
    : cfg_(std::move(cfg)), opts_(opts), data_(std::move(data)) {
  cfg_.validate();
  if (!opts_.comm_sim && cfg_.workers != 1) {
    throw ConfigError("running without comm-sim needs exactly one worker");
  }
  model_ = Model::build(cfg_.arch, data_.train.sample_shape(), data_.train.classes, cfg_.seed);
  if (!cfg_.layer_thresholds.empty() && cfg_.layer_thresholds.size() != model_.conv_count()) {
    throw ConfigError("layer_thresholds needs one value per conv layer");
  }
  state_.history = LossHistory(cfg_.trigger_window);
  init_derived();
}

Trainer::Trainer(Checkpoint ckpt, DataBundle data, TrainerOptions opts)
    : cfg_(std::move(ckpt.config)),
      opts_(opts),
      data_(std::move(data)),
      model_(std::move(ckpt.model)),
      state_(std::move(ckpt.state)) {
  cfg_.validate();
  if (model_.sample_shape() != data_.train.sample_shape()) {
    throw ConfigError("checkpoint model does not match the dataset shape");
  }
  init_derived();
  for (std::size_t l = 0; l < ckpt.indices.size(); ++l) {
    const bool stored = ckpt.indices[l] != nullptr;
    const bool built = l < indices_.size() && indices_[l] != nullptr;
    if (stored != built || (stored && !(*ckpt.indices[l] == *indices_[l]))) {
      throw IntegrityError("checkpoint indices disagree with its plan");
    }
  }
}

void Trainer::init_derived() {
  exec_.reset();
  indices_.assign(model_.conv_count(), nullptr);
  runtime_.index.assign(model_.conv_count(), nullptr);
  if (!state_.plan) return;
  if (!state_.plan->frozen()) throw StateError("train state holds an unfrozen plan");
  exec_ = make_exec_plan(*state_.plan, cfg_.sparsity_threshold, cfg_.layer_thresholds);
  for (std::size_t l = 0; l < model_.conv_count(); ++l) {
    indices_[l] = build_index(*state_.plan, l, TileConfig{cfg_.tile_budget});
  }
  if (state_.hard_pruned()) {
    for (std::size_t l = 0; l < model_.conv_count(); ++l) {
      if (exec_->layers[l].op == ConvOperator::kPatternSpmm) runtime_.index[l] = indices_[l];
    }
  }
}

const SparseRuntime* Trainer::sparse_runtime() const {
  return state_.hard_pruned() ? &runtime_ : nullptr;
}

double Trainer::lr_at(int epoch) const {
  if (cfg_.lr_decay_every <= 0) return cfg_.lr;
  return cfg_.lr * std::pow(cfg_.lr_decay_factor, epoch / cfg_.lr_decay_every);
}

std::vector<std::size_t> Trainer::epoch_order(int epoch) const {
  std::vector<std::size_t> order(data_.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(cfg_.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1)));
  for (std::size_t i = order.size(); i-- > 1;) std::swap(order[i], order[rng() % (i + 1)]);
  return order;
}

Trainer::StepResult Trainer::compute_step(std::span<const std::size_t> idx,
                                          ReduceReport* report) {
  const std::size_t active = std::min<std::size_t>(cfg_.workers, idx.size());
  std::vector<std::vector<std::size_t>> shards(active);
  for (std::size_t p = 0; p < idx.size(); ++p) {
    shards[shard_of(p, static_cast<int>(active))].push_back(idx[p]);
  }

  const SparseRuntime* rt = sparse_runtime();
  StepResult res;
  std::vector<Gradients> wg(active);
  for (std::size_t w = 0; w < active; ++w) {
    const FeatureMap x = data_.train.batch(shards[w]);
    const auto labels = data_.train.batch_labels(shards[w]);
    ForwardCache cache;
    const Matrix logits = forward(model_, x, &cache, rt);
    const LossResult lr = softmax_xent_loss(logits, labels);
    res.loss_sum += lr.loss * static_cast<double>(shards[w].size());
    res.correct += lr.correct;
    wg[w] = backward(model_, cache, lr.dlogits, rt);
    if (state_.hard_pruned()) {
      for (std::size_t l = 0; l < model_.conv_count(); ++l) {
        apply_plan_mask(wg[w].conv_weight[l], *state_.plan, l);
      }
    }
  }
  if (!opts_.comm_sim) {
    res.grads = std::move(wg[0]);
    return res;
  }

  Gradients& g = res.grads;
  g.conv_weight.resize(model_.conv_count());
  g.conv_bias.resize(model_.conv_count());
  g.fc_weight.resize(model_.fc_count());
  g.fc_bias.resize(model_.fc_count());
  auto reduce_vec = [&](auto pick) {
    std::vector<std::span<const double>> views;
    for (auto& w : wg) views.push_back(pick(w));
    return allreduce_values(views);
  };
  for (std::size_t l = 0; l < model_.conv_count(); ++l) {
    std::vector<Tensor4> t;
    t.reserve(active);
    for (auto& w : wg) t.push_back(std::move(w.conv_weight[l]));
    g.conv_weight[l] = state_.hard_pruned() ? allreduce_pattern(t, *state_.plan, l, report)
                                            : allreduce_dense(t, report);
    g.conv_bias[l] =
        reduce_vec([&](Gradients& w) { return std::span<const double>(w.conv_bias[l]); });
  }
  for (std::size_t l = 0; l < model_.fc_count(); ++l) {
    auto flat = reduce_vec([&](Gradients& w) { return w.fc_weight[l].data(); });
    g.fc_weight[l] =
        Matrix(model_.fc(l).weights.rows(), model_.fc(l).weights.cols(), std::move(flat));
    g.fc_bias[l] = reduce_vec([&](Gradients& w) { return std::span<const double>(w.fc_bias[l]); });
  }
  return res;
}

void Trainer::apply_update(const Gradients& g, double lr, std::vector<Tensor4>* reg) {
  for (std::size_t l = 0; l < model_.conv_count(); ++l) {
    LayerParams& p = model_.conv(l);
    std::span<const double> r;
    if (reg && !(*reg)[l].empty()) r = (*reg)[l].data();
    sgd_step(p.weights.data(), g.conv_weight[l].data(), lr, r);
    sgd_step(p.bias, g.conv_bias[l], lr);
  }
  for (std::size_t l = 0; l < model_.fc_count(); ++l) {
    FcParams& p = model_.fc(l);
    sgd_step(p.weights.data(), g.fc_weight[l].data(), lr);
    sgd_step(p.bias, g.fc_bias[l], lr);
  }
}

void Trainer::run_epoch() {
  if (finished()) throw StateError("run_epoch: epoch budget already spent");
  const auto t0 = std::chrono::steady_clock::now();
  const int epoch = state_.epochs_done;
  const Stage stage = state_.stage;
  const double lr = lr_at(epoch);
  const auto order = epoch_order(epoch);
  const std::size_t n = order.size();
  const std::size_t batch = static_cast<std::size_t>(cfg_.batch_size);
  const std::size_t batches = (n + batch - 1) / batch;
  const SpikeConfig spike{cfg_.spike_rule, cfg_.delta_spike, cfg_.delta_literal};
  const RegConfig reg_cfg{cfg_.lambda_pattern, cfg_.lambda_kernel};

  ReduceReport report;
  report.workers = cfg_.workers;
  double loss_sum = 0.0;
  long correct = 0;
  const std::uint64_t skipped_before =
      state_.occurrence ? state_.occurrence->batches_skipped() : 0;

  for (std::size_t b = 0; b < batches; ++b) {
    const std::span<const std::size_t> idx(order.data() + b * batch,
                                           std::min(batch, n - b * batch));
    StepResult step = compute_step(idx, opts_.comm_sim ? &report : nullptr);
    loss_sum += step.loss_sum;
    correct += step.correct;
    const double batch_loss = step.loss_sum / static_cast<double>(idx.size());
    const bool last = b + 1 == batches;

    if (stage == Stage::kPatternGen && last) {
      for (std::size_t l = 0; l < model_.conv_count(); ++l) {
        const Tensor4& w = model_.conv(l).weights;
        if (!is_3x3(w.shape())) continue;
        const Tensor4& g = step.grads.conv_weight[l];
        for (int f = 0; f < w.shape().d0; ++f) {
          for (int c = 0; c < w.shape().d1; ++c) {
            const auto ws = w.slice(f, c);
            const auto gs = g.slice(f, c);
            state_.candidates.accumulate(propose_kernel_pattern(ws, gs, seed_kernel(ws, gs)));
          }
        }
      }
    }
    if (stage == Stage::kFinalize) {
      std::vector<ConvLayerView> views;
      for (std::size_t l = 0; l < model_.conv_count(); ++l) {
        views.push_back({&model_.conv(l).weights, &step.grads.conv_weight[l]});
      }
      record_batch(*state_.occurrence, views, *state_.pool,
                   state_.prev_batch_loss.value_or(std::numeric_limits<double>::quiet_NaN()),
                   batch_loss, spike);
      if (last) last_conv_grads_ = step.grads.conv_weight;
    }
    std::vector<Tensor4> reg;
    if (stage == Stage::kRegularize) {
      reg.resize(model_.conv_count());
      for (std::size_t l = 0; l < model_.conv_count(); ++l) {
        if (state_.plan->layer(l).planned) {
          reg[l] = reg_grad(model_.conv(l).weights, *state_.plan, l, reg_cfg);
        }
      }
    }
    apply_update(step.grads, lr, reg.empty() ? nullptr : &reg);
    state_.prev_batch_loss = batch_loss;
    if (hook_) hook_(StepInfo{epoch, b, stage, &model_, &state_});
  }

  const double epoch_loss = loss_sum / static_cast<double>(n);
  double reg_total = 0.0;
  if (stage == Stage::kRegularize) {
    for (std::size_t l = 0; l < model_.conv_count(); ++l) {
      reg_total += reg_loss(model_.conv(l).weights, *state_.plan, l, reg_cfg);
    }
  }
  const Shape4 s = data_.train.sample_shape();
  const FlopsReport fr =
      flops_report(model_, state_.plan ? &*state_.plan : nullptr,
                   stage == Stage::kMasked ? exec_plan() : nullptr,
                   Shape4{static_cast<int>(n), s.d1, s.d2, s.d3});
  state_.cum_train_flops += fr.train;
  state_.cum_dense_train_flops += fr.dense_train;

  end_of_epoch(epoch_loss);

  MetricsRow row;
  row.epoch = epoch;
  row.stage = static_cast<int>(stage);
  row.lr = lr;
  row.train_loss = epoch_loss;
  row.train_acc = static_cast<double>(correct) / static_cast<double>(n);
  row.test_acc = evaluate();
  row.reg_loss = reg_total;
  row.compression_ratio = compression_ratio(model_);
  row.plan_compression = state_.plan ? state_.plan->compression_ratio() : 1.0;
  row.cum_train_flops = state_.cum_train_flops;
  row.cum_dense_train_flops = state_.cum_dense_train_flops;
  row.payload_ratio = report.payload_ratio();
  row.dense_bytes = report.dense_bytes;
  row.sparse_bytes = report.sparse_bytes;
  row.dense_ring_bytes = report.dense_ring_bytes;
  row.sparse_ring_bytes = report.sparse_ring_bytes;
  row.skipped_batches =
      (state_.occurrence ? state_.occurrence->batches_skipped() : 0) - skipped_before;
  state_.metrics.push_back(row);
  last_report_ = report;

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  timing_.push_back({epoch, secs});
  logger()->info("epoch {:3d} stage {} ({}) loss {:.5f} train {:.4f} test {:.4f} cr {:.3f} {:.1f}s",
                 epoch, row.stage, to_string(stage), epoch_loss, row.train_acc, row.test_acc,
                 row.compression_ratio, secs);
}

void Trainer::end_of_epoch(double epoch_loss) {
  const int done = ++state_.epochs_done;
  auto enter = [&](Stage next) {
    logger()->info("stage {} -> {} after epoch {}", to_string(state_.stage), to_string(next),
                   done - 1);
    state_.stage = next;
    state_.stage_begin = done;
  };
  switch (state_.stage) {
    case Stage::kWarmup: {
      state_.history.append(epoch_loss);
      if (cfg_.no_prune) break;
      const auto fire = should_start_pruning(state_.history, cfg_.start_threshold);
      if (fire && *fire) {
        enter(Stage::kPatternGen);
        break;
      }
      const int needed = cfg_.dppg_epochs + cfg_.finalize_epochs + cfg_.min_reg_epochs + 1;
      if (cfg_.total_epochs - done < needed) {
        const auto slope = state_.history.smoothed_slope();
        throw StateError(
            "stage-1 trigger did not fire by epoch " + std::to_string(done - 1) +
            " (smoothed slope " + (slope ? std::to_string(*slope) : std::string("n/a")) +
            ", threshold " + std::to_string(cfg_.start_threshold) + "); " +
            std::to_string(needed) + " epochs are needed for the remaining stages but only " +
            std::to_string(cfg_.total_epochs - done) + " are left");
      }
      break;
    }
    case Stage::kPatternGen:
      if (done - state_.stage_begin >= cfg_.dppg_epochs) {
        state_.pool = finalize_pool(state_.candidates, cfg_.pool_size);
        state_.occurrence = OccurrenceTable(model_.conv_weight_shapes(), state_.pool->size());
        logger()->info("pattern pool: {} patterns from {} candidates", state_.pool->size(),
                       state_.candidates.size());
        enter(Stage::kFinalize);
      }
      break;
    case Stage::kFinalize:
      if (done - state_.stage_begin >= cfg_.finalize_epochs) {
        freeze_plan();
        enter(Stage::kRegularize);
      }
      break;
    case Stage::kRegularize:
      if (done >= std::max(cfg_.hard_prune_epoch, state_.stage_begin + cfg_.min_reg_epochs)) {
        hard_prune_all();
        enter(Stage::kMasked);
      }
      break;
    case Stage::kMasked:
      break;
  }
}

void Trainer::freeze_plan() {
  std::vector<ConvLayerView> views;
  for (std::size_t l = 0; l < model_.conv_count(); ++l) {
    const Tensor4* g = l < last_conv_grads_.size() ? &last_conv_grads_[l] : nullptr;
    views.push_back({&model_.conv(l).weights, g});
  }
  const bool have_grads = last_conv_grads_.size() == model_.conv_count();
  const auto patterns = have_grads
                            ? finalize_patterns(*state_.occurrence, *state_.pool, views)
                            : finalize_patterns(*state_.occurrence, *state_.pool);
  std::vector<std::vector<std::uint8_t>> keep(model_.conv_count());
  for (std::size_t l = 0; l < model_.conv_count(); ++l) {
    if (patterns[l].empty()) continue;
    if (l == 0 && cfg_.exempt_first_conv) continue;
    keep[l] = select_pruned_kernels(*state_.occurrence, l,
                                    PruneAmount::of_fraction(cfg_.prune_fraction));
  }
  SparsityPlan plan = assemble_plan(*state_.pool, model_.conv_weight_shapes(), patterns, keep);
  plan.freeze();
  state_.plan = std::move(plan);
  last_conv_grads_.clear();
  init_derived();
  logger()->info("plan frozen: compression {:.4f}, counted {} batches, skipped {}",
                 state_.plan->compression_ratio(), state_.occurrence->batches_counted(),
                 state_.occurrence->batches_skipped());
  for (std::size_t l = 0; l < exec_->layers.size(); ++l) {
    logger()->info("  conv {}: sparsity {:.4f} -> {}", l, exec_->layers[l].sparsity_ratio,
                   to_string(exec_->layers[l].op));
  }
}

void Trainer::hard_prune_all() {
  if (state_.hard_pruned()) throw StateError("hard prune requested twice");
  for (std::size_t l = 0; l < model_.conv_count(); ++l) {
    hard_prune(model_.conv(l).weights, *state_.plan, l);
  }
  state_.hard_prune_epoch = state_.epochs_done;
  init_derived();
  logger()->info("hard prune before epoch {}: measured compression {:.4f}",
                 state_.hard_prune_epoch, compression_ratio(model_));
}

double Trainer::evaluate() const {
  const SparseRuntime* rt = sparse_runtime();
  const std::size_t n = data_.test.size();
  long correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < n; start += kEvalBatch) {
    idx.resize(std::min<std::size_t>(kEvalBatch, n - start));
    std::iota(idx.begin(), idx.end(), start);
    const Matrix logits = forward(model_, data_.test.batch(idx), nullptr, rt);
    correct += softmax_xent_loss(logits, data_.test.batch_labels(idx)).correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

void Trainer::run(std::optional<int> stop_after) {
  while (!finished() && (!stop_after || state_.epochs_done < *stop_after)) {
    run_epoch();
    if (opts_.write_outputs) write_outputs();
  }
}

Checkpoint Trainer::checkpoint() const { return Checkpoint{cfg_, model_, state_, indices_}; }

void Trainer::write_outputs() const {
  const std::filesystem::path dir = cfg_.out_dir;
  std::filesystem::create_directories(dir);
  write_metrics(dir / "metrics.csv", state_.metrics);
  write_timing(dir / "timing.csv", timing_);
  save_checkpoint(dir / "checkpoint.bin", checkpoint());
}

namespace {

RunResult finish(const Trainer& t) {
  RunResult r;
  const std::filesystem::path dir = t.config().out_dir;
  r.checkpoint = dir / "checkpoint.bin";
  r.metrics = dir / "metrics.csv";
  r.test_acc = t.state().metrics.empty() ? t.evaluate() : t.state().metrics.back().test_acc;
  r.compression_ratio = compression_ratio(t.model());
  r.rows = t.state().metrics;
  if (t.state().hard_pruned()) {
    const double planned = t.state().plan->compression_ratio();
    if (r.compression_ratio < planned) {
      throw IntegrityError("final model has nonzeros outside its plan");
    }
    if (r.compression_ratio != planned) {
      logger()->warn("measured compression {} exceeds the plan's {}: some kept weights are 0",
                     r.compression_ratio, planned);
    }
  }
  return r;
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& cfg, TrainerOptions opts) {
  cfg.validate();
  Trainer t(cfg, load_data(cfg), opts);
  t.run();
  return finish(t);
}

RunResult resume_pipeline(const std::filesystem::path& checkpoint,
                          std::optional<std::filesystem::path> out_dir) {
  Checkpoint ck = load_checkpoint(checkpoint);
  if (out_dir) ck.config.out_dir = out_dir->string();
  DataBundle data = load_data(ck.config);
  Trainer t(std::move(ck), std::move(data));
  t.run();
  return finish(t);
}

}  // namespace pattrain
