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

#include "pattrain/comm_sim.hpp"

#include <string>

#include "pattrain/error.hpp"
#include "pattrain/finalizer.hpp"

namespace pattrain {

double ReduceReport::savings_ratio() const {
  if (dense_bytes == 0) return 0.0;
  return 1.0 - static_cast<double>(sparse_bytes) / static_cast<double>(dense_bytes);
}

double ReduceReport::payload_ratio() const {
  if (dense_bytes == 0) return 1.0;
  return static_cast<double>(sparse_bytes) / static_cast<double>(dense_bytes);
}

void ReduceReport::add(const ReduceReport& other) {
  dense_bytes += other.dense_bytes;
  sparse_bytes += other.sparse_bytes;
  dense_ring_bytes += other.dense_ring_bytes;
  sparse_ring_bytes += other.sparse_ring_bytes;
}

void ReduceReport::account(std::size_t dense_elems, std::size_t sparse_elems) {
  const std::uint64_t elem = sizeof(double);
  dense_bytes += 2 * elem * dense_elems;
  sparse_bytes += 2 * elem * sparse_elems;
  const double ring = workers > 0 ? 2.0 * (workers - 1) / workers : 0.0;
  dense_ring_bytes += ring * static_cast<double>(elem * dense_elems);
  sparse_ring_bytes += ring * static_cast<double>(elem * sparse_elems);
}

std::vector<double> allreduce_values(std::span<const std::span<const double>> workers,
                                     ReduceReport* report) {
  if (workers.empty()) throw ShapeError("allreduce: no workers");
  const std::size_t n = workers[0].size();
  for (const auto& w : workers) {
    if (w.size() != n) throw ShapeError("allreduce: worker buffers differ in size");
  }
  std::vector<double> out(workers[0].begin(), workers[0].end());
  for (std::size_t w = 1; w < workers.size(); ++w) {
    for (std::size_t i = 0; i < n; ++i) out[i] += workers[w][i];
  }
  if (workers.size() > 1) {
    const double count = static_cast<double>(workers.size());
    for (double& v : out) v /= count;
  }
  if (report) report->account(n, n);
  return out;
}

Tensor4 allreduce_dense(std::span<const Tensor4> workers, ReduceReport* report) {
  if (workers.empty()) throw ShapeError("allreduce_dense: no workers");
  std::vector<std::span<const double>> views;
  for (const Tensor4& t : workers) {
    if (t.shape() != workers[0].shape()) throw ShapeError("allreduce_dense: shape mismatch");
    views.push_back(t.data());
  }
  return Tensor4(workers[0].shape(), allreduce_values(views, report));
}

Tensor4 allreduce_pattern(std::span<const Tensor4> workers, const SparsityPlan& plan,
                          std::size_t l, ReduceReport* report) {
  if (!plan.frozen()) throw StateError("allreduce_pattern needs a frozen plan");
  if (workers.empty()) throw ShapeError("allreduce_pattern: no workers");
  for (std::size_t w = 0; w < workers.size(); ++w) {
    if (workers[w].shape() != workers[0].shape()) {
      throw ShapeError("allreduce_pattern: shape mismatch");
    }
    if (count_pruned_nonzeros(workers[w], plan, l) != 0) {
      throw IntegrityError("allreduce_pattern: worker " + std::to_string(w) +
                           " has a nonzero gradient at a pruned coordinate of layer " +
                           std::to_string(l));
    }
  }
  const Tensor4 mask = plan.mask(l);
  const auto m = mask.data();
  Tensor4 out = workers[0];
  auto o = out.data();
  for (std::size_t w = 1; w < workers.size(); ++w) {
    const auto src = workers[w].data();
    for (std::size_t i = 0; i < o.size(); ++i) {
      if (m[i] != 0.0) o[i] += src[i];
    }
  }
  const double count = static_cast<double>(workers.size());
  for (std::size_t i = 0; i < o.size(); ++i) {
    if (m[i] == 0.0) {
      o[i] = 0.0;
    } else if (workers.size() > 1) {
      o[i] /= count;
    }
  }
  if (report) report->account(out.size(), plan.nonzeros(l));
  return out;
}

}  // namespace pattrain
