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

#include "pattrain/metrics.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "pattrain/error.hpp"

namespace pattrain {

double MetricsRow::train_flops_saved_pct() const {
  return cum_dense_train_flops > 0.0 ? 100.0 * (1.0 - cum_train_flops / cum_dense_train_flops)
                                     : 0.0;
}

std::string metrics_header() {
  return "epoch,stage,lr,train_loss,train_acc,test_acc,reg_loss,compression_ratio,"
         "plan_compression,cum_train_flops,train_flops_saved_pct,payload_ratio,dense_bytes,"
         "sparse_bytes,dense_ring_bytes,sparse_ring_bytes,skipped_batches";
}

namespace {

std::string row_body(const std::string& epoch, const MetricsRow& r) {
  char buf[1024];
  std::snprintf(buf, sizeof(buf),
                "%s,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%" PRIu64
                ",%" PRIu64 ",%.17g,%.17g,%" PRIu64,
                epoch.c_str(), r.stage, r.lr, r.train_loss, r.train_acc, r.test_acc, r.reg_loss,
                r.compression_ratio, r.plan_compression, r.cum_train_flops,
                r.train_flops_saved_pct(), r.payload_ratio, r.dense_bytes, r.sparse_bytes,
                r.dense_ring_bytes, r.sparse_ring_bytes, r.skipped_batches);
  return buf;
}

}  // namespace

std::string format_row(const MetricsRow& r) { return row_body(std::to_string(r.epoch), r); }

std::string format_summary(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw StateError("metrics: no rows to summarise");
  MetricsRow s = rows.back();
  s.dense_bytes = s.sparse_bytes = s.skipped_batches = 0;
  s.dense_ring_bytes = s.sparse_ring_bytes = 0.0;
  for (const MetricsRow& r : rows) {
    s.dense_bytes += r.dense_bytes;
    s.sparse_bytes += r.sparse_bytes;
    s.dense_ring_bytes += r.dense_ring_bytes;
    s.sparse_ring_bytes += r.sparse_ring_bytes;
    s.skipped_batches += r.skipped_batches;
  }
  s.payload_ratio = s.dense_bytes > 0 ? static_cast<double>(s.sparse_bytes) /
                                            static_cast<double>(s.dense_bytes)
                                      : 1.0;
  return row_body("summary", s);
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out = metrics_header() + "\n";
  for (const MetricsRow& r : rows) out += format_row(r) + "\n";
  if (!rows.empty()) out += format_summary(rows) + "\n";
  return out;
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_metrics(const std::filesystem::path& path, const std::vector<MetricsRow>& rows) {
  write_text_atomic(path, metrics_csv(rows));
}

void write_timing(const std::filesystem::path& path, const std::vector<TimingRow>& rows) {
  std::string out = "epoch,seconds\n";
  char buf[64];
  for (const TimingRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f\n", r.epoch, r.seconds);
    out += buf;
  }
  write_text_atomic(path, out);
}

}  // namespace pattrain
