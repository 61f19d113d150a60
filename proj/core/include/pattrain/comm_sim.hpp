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

// In-process gradient reduction across simulated data-parallel workers.
// Nothing is sent anywhere; the reducers compute the mean and account for
// the bytes a real allreduce would move. Once weights are hard-pruned the
// pattern reducer only moves the coordinates that can still be nonzero.

#ifndef PATTRAIN_COMM_SIM_HPP_
#define PATTRAIN_COMM_SIM_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "pattrain/sparsity_plan.hpp"
#include "pattrain/tensor.hpp"

namespace pattrain {

/// Payload accounting summed over every reduction it has seen.
struct ReduceReport {
  int workers = 1;
  // Naive model: each worker sends its payload up and receives it back (2x).
  std::uint64_t dense_bytes = 0;
  std::uint64_t sparse_bytes = 0;
  // Ring allreduce: 2 (W - 1) / W times the payload, per worker.
  double dense_ring_bytes = 0.0;
  double sparse_ring_bytes = 0.0;

  /// 1 - sparse / dense; 0 when nothing was reduced.
  double savings_ratio() const;
  /// sparse / dense; 1 when nothing was reduced.
  double payload_ratio() const;
  void add(const ReduceReport& other);
  void account(std::size_t dense_elems, std::size_t sparse_elems);
};

/// Elementwise mean of equally sized worker buffers.
std::vector<double> allreduce_values(std::span<const std::span<const double>> workers,
                                     ReduceReport* report = nullptr);

Tensor4 allreduce_dense(std::span<const Tensor4> workers, ReduceReport* report = nullptr);

// Mean over the coordinates layer `l` of the frozen plan keeps; every other
// coordinate of the result is exactly 0.0. A worker holding a nonzero
// gradient at a pruned coordinate raises IntegrityError.
Tensor4 allreduce_pattern(std::span<const Tensor4> workers, const SparsityPlan& plan,
                          std::size_t l, ReduceReport* report = nullptr);

/// Worker that owns global sample `index` under round-robin sharding.
inline int shard_of(std::size_t index, int workers) {
  return static_cast<int>(index % static_cast<std::size_t>(workers));
}

}  // namespace pattrain

#endif  // PATTRAIN_COMM_SIM_HPP_
