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

#ifndef PATTRAIN_METRICS_HPP_
#define PATTRAIN_METRICS_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pattrain {

// One row per epoch. Every field is a deterministic function of config and
// seed; wall-clock time is kept out of this file (see TimingRow).
struct MetricsRow {
  int epoch = 0;
  int stage = 1;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double reg_loss = 0.0;
  double compression_ratio = 1.0;    // measured on the weights
  double plan_compression = 1.0;     // from the plan, 1 before freeze
  double cum_train_flops = 0.0;      // conv layers
  double cum_dense_train_flops = 0.0;
  double payload_ratio = 1.0;        // sparse / dense bytes this epoch
  std::uint64_t dense_bytes = 0;
  std::uint64_t sparse_bytes = 0;
  double dense_ring_bytes = 0.0;
  double sparse_ring_bytes = 0.0;
  std::uint64_t skipped_batches = 0;  // loss spikes ignored by finalization

  double train_flops_saved_pct() const;
  bool operator==(const MetricsRow&) const = default;
};

struct TimingRow {
  int epoch = 0;
  double seconds = 0.0;
};

std::string metrics_header();
std::string format_row(const MetricsRow& row);
/// Final line: last-epoch values with run-total byte counts, epoch column "summary".
std::string format_summary(const std::vector<MetricsRow>& rows);
std::string metrics_csv(const std::vector<MetricsRow>& rows);

void write_text_atomic(const std::filesystem::path& path, const std::string& text);
void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows);
void write_timing(const std::filesystem::path& path, const std::vector<TimingRow>& rows);

}  // namespace pattrain

#endif  // PATTRAIN_METRICS_HPP_
