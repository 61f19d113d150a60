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

#include "pattrain/pattern.hpp"

#include <algorithm>
#include <bit>
#include <set>

#include <nlohmann/json.hpp>

#include "pattrain/error.hpp"
#include "pattrain/importance.hpp"

namespace pattrain {

Pattern Pattern::from_mask(std::uint32_t mask) {
  if (mask > kFullMask) throw ConfigError("pattern mask " + std::to_string(mask) + " exceeds 9 bits");
  return Pattern(static_cast<std::uint16_t>(mask));
}

Pattern Pattern::from_cells(std::span<const int> cells) {
  std::uint32_t mask = 0;
  for (int c : cells) {
    if (c < 0 || c >= kCells) throw ConfigError("pattern cell out of range");
    mask |= 1U << c;
  }
  return Pattern(static_cast<std::uint16_t>(mask));
}

Pattern Pattern::from_cells(std::initializer_list<int> cells) {
  return from_cells(std::span<const int>(cells.begin(), cells.size()));
}

int Pattern::cardinality() const { return std::popcount(mask_); }

std::vector<int> Pattern::cells() const {
  std::vector<int> out;
  for (int i = 0; i < kCells; ++i) {
    if (contains(i)) out.push_back(i);
  }
  return out;
}

std::string Pattern::str() const {
  std::string s;
  for (int r = 0; r < kSide; ++r) {
    if (r) s += '/';
    for (int c = 0; c < kSide; ++c) s += contains(make_cell(r, c)) ? '1' : '0';
  }
  return s;
}

namespace {

std::vector<int> neighbors(int cell, bool diagonal) {
  std::vector<int> out;
  const int r = cell_row(cell);
  const int c = cell_col(cell);
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      if (!diagonal && dr != 0 && dc != 0) continue;
      const int nr = r + dr;
      const int nc = c + dc;
      if (nr >= 0 && nr < Pattern::kSide && nc >= 0 && nc < Pattern::kSide) {
        out.push_back(make_cell(nr, nc));
      }
    }
  }
  return out;
}

void check_kernel(std::span<const double> weights, std::span<const double> grads) {
  if (weights.size() != Pattern::kCells || grads.size() != Pattern::kCells) {
    throw ShapeError("pattern proposal needs 3x3 kernel slices");
  }
}

// Best 4-cell pattern made of the seeds plus two of `extra`.
Pattern best_completion(std::span<const double> weights, std::span<const double> grads,
                        int first, int second, const std::vector<int>& extra) {
  Pattern best;
  double best_score = -1.0;
  for (std::size_t i = 0; i < extra.size(); ++i) {
    for (std::size_t j = i + 1; j < extra.size(); ++j) {
      const Pattern p = Pattern::from_cells({first, second, extra[i], extra[j]});
      const double s = pattern_importance(weights, grads, p);
      if (s > best_score || (s == best_score && p < best)) {
        best = p;
        best_score = s;
      }
    }
  }
  return best;
}

}  // namespace

std::vector<int> neighbors8(int cell) { return neighbors(cell, true); }
std::vector<int> neighbors4(int cell) { return neighbors(cell, false); }

bool adjacent8(int a, int b) {
  return a != b && std::abs(cell_row(a) - cell_row(b)) <= 1 &&
         std::abs(cell_col(a) - cell_col(b)) <= 1;
}

bool adjacent4(int a, int b) {
  return std::abs(cell_row(a) - cell_row(b)) + std::abs(cell_col(a) - cell_col(b)) == 1;
}

std::vector<Pattern> legal_patterns() {
  std::set<Pattern> out;
  for (int first = 0; first < Pattern::kCells; ++first) {
    for (int second : neighbors8(first)) {
      const auto cand = candidate_positions(first, second);
      for (std::size_t i = 0; i < cand.size(); ++i) {
        for (std::size_t j = i + 1; j < cand.size(); ++j) {
          out.insert(Pattern::from_cells({first, second, cand[i], cand[j]}));
        }
      }
    }
  }
  return {out.begin(), out.end()};
}

int select_first_position(std::span<const double> weights, std::span<const double> grads) {
  check_kernel(weights, grads);
  int best = 0;
  double best_score = weight_importance(weights[0], grads[0]);
  for (int i = 1; i < Pattern::kCells; ++i) {
    const double s = weight_importance(weights[i], grads[i]);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best;
}

int select_second_position(std::span<const double> weights, std::span<const double> grads,
                           int first) {
  check_kernel(weights, grads);
  if (first < 0 || first >= Pattern::kCells) throw ConfigError("first position out of range");
  int best = -1;
  double best_score = -1.0;
  for (int n : neighbors8(first)) {
    const double s = weight_importance(weights[n], grads[n]);
    if (s > best_score) {
      best = n;
      best_score = s;
    }
  }
  return best;
}

std::vector<int> candidate_positions(int first, int second) {
  if (first == second) throw ConfigError("candidate_positions: seeds must differ");
  std::set<int> out;
  for (int n : neighbors4(first)) out.insert(n);
  for (int n : neighbors4(second)) out.insert(n);
  out.erase(first);
  out.erase(second);
  return {out.begin(), out.end()};
}

KernelSeedState seed_kernel(std::span<const double> weights, std::span<const double> grads) {
  KernelSeedState s;
  s.first = select_first_position(weights, grads);
  s.second = select_second_position(weights, grads, s.first);
  s.candidates = candidate_positions(s.first, s.second);
  return s;
}

Pattern propose_kernel_pattern(std::span<const double> weights, std::span<const double> grads,
                               const KernelSeedState& seed) {
  check_kernel(weights, grads);
  std::vector<int> extra = seed.candidates;
  if (extra.size() < 2) {
    std::set<int> wide(extra.begin(), extra.end());
    for (int n : neighbors8(seed.first)) wide.insert(n);
    for (int n : neighbors8(seed.second)) wide.insert(n);
    wide.erase(seed.first);
    wide.erase(seed.second);
    extra.assign(wide.begin(), wide.end());
  }
  if (extra.size() < 2) {
    extra.clear();
    for (int i = 0; i < Pattern::kCells; ++i) {
      if (i != seed.first && i != seed.second) extra.push_back(i);
    }
  }
  return best_completion(weights, grads, seed.first, seed.second, extra);
}

void CandidatePool::accumulate(Pattern p) { ++scores_[p]; }

void CandidatePool::merge(const CandidatePool& other) {
  for (const auto& [p, s] : other.scores_) scores_[p] += s;
}

std::int64_t CandidatePool::score(Pattern p) const {
  const auto it = scores_.find(p);
  return it == scores_.end() ? 0 : it->second;
}

std::int64_t CandidatePool::total() const {
  std::int64_t t = 0;
  for (const auto& [p, s] : scores_) t += s;
  return t;
}

void CandidatePool::set_score(Pattern p, std::int64_t score) {
  if (score < 1) throw ConfigError("candidate score must be >= 1");
  scores_[p] = score;
}

PatternPool::PatternPool(std::vector<Pattern> patterns, int capacity)
    : patterns_(std::move(patterns)), capacity_(capacity) {
  if (capacity < 1) throw ConfigError("pattern pool size must be >= 1");
  if (patterns_.size() > static_cast<std::size_t>(capacity)) {
    throw ConfigError("pattern pool holds more than N patterns");
  }
  std::set<Pattern> seen;
  for (const Pattern& p : patterns_) {
    if (p.cardinality() != Pattern::kCardinality) {
      throw ConfigError("pool pattern " + p.str() + " does not keep exactly 4 cells");
    }
    if (!seen.insert(p).second) throw ConfigError("duplicate pattern " + p.str() + " in pool");
  }
}

int PatternPool::find(Pattern p) const {
  const auto it = std::find(patterns_.begin(), patterns_.end(), p);
  return it == patterns_.end() ? -1 : static_cast<int>(it - patterns_.begin());
}

std::string PatternPool::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const Pattern& p : patterns_) j.push_back(p.mask());
  return j.dump();
}

PatternPool PatternPool::from_json(const std::string& text, int capacity) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("pattern pool JSON: ") + e.what());
  }
  if (!j.is_array()) throw ParseError("pattern pool JSON must be an array of masks");
  std::vector<Pattern> patterns;
  for (const auto& v : j) {
    if (!v.is_number_unsigned()) throw ParseError("pattern pool JSON: mask must be unsigned");
    patterns.push_back(Pattern::from_mask(v.get<std::uint32_t>()));
  }
  return PatternPool(std::move(patterns), capacity);
}

PatternPool finalize_pool(const CandidatePool& pool, int n) {
  if (n < 1) throw ConfigError("pattern pool size N must be >= 1");
  if (pool.empty()) throw ConfigError("candidate pool is empty: pool generation never ran");
  std::vector<std::pair<Pattern, std::int64_t>> ranked(pool.scores().begin(), pool.scores().end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<Pattern> top;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(n); ++i) {
    top.push_back(ranked[i].first);
  }
  return PatternPool(std::move(top), n);
}

}  // namespace pattrain
