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

#ifndef PATTRAIN_PATTERN_HPP_
#define PATTRAIN_PATTERN_HPP_

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace pattrain {

// A set of cells of a 3x3 kernel, stored as a 9-bit row-major mask
// (bit i is cell (i / 3, i % 3)). The mask integer is the canonical encoding:
// two patterns are equal iff their masks are, and lower masks sort first.
class Pattern {
 public:
  static constexpr int kSide = 3;
  static constexpr int kCells = 9;
  static constexpr int kCardinality = 4;  // cells kept by a pool pattern
  static constexpr std::uint16_t kFullMask = 0x1FF;

  constexpr Pattern() = default;

  /// Throws ConfigError when bits above the ninth are set.
  static Pattern from_mask(std::uint32_t mask);
  static Pattern from_cells(std::span<const int> cells);
  static Pattern from_cells(std::initializer_list<int> cells);
  static constexpr Pattern full() { return Pattern(kFullMask); }

  constexpr std::uint16_t mask() const { return mask_; }
  int cardinality() const;
  constexpr bool contains(int cell) const { return (mask_ >> cell) & 1U; }
  std::vector<int> cells() const;
  std::string str() const;  // e.g. "110/110/000"

  constexpr bool operator==(const Pattern&) const = default;
  /// Lexicographic on the ascending cell list (a prefix sorts first).
  constexpr std::strong_ordering operator<=>(const Pattern& o) const {
    return lex_key() <=> o.lex_key();
  }

 private:
  explicit constexpr Pattern(std::uint16_t mask) : mask_(mask) {}
  // One decimal digit per slot: cell + 1, then 0 once the cells run out.
  constexpr std::uint64_t lex_key() const {
    std::uint64_t key = 0;
    int slots = 0;
    for (int c = 0; c < kCells; ++c) {
      if (contains(c)) {
        key = key * 10 + static_cast<std::uint64_t>(c + 1);
        ++slots;
      }
    }
    for (; slots < kCells; ++slots) key *= 10;
    return key;
  }
  std::uint16_t mask_ = 0;
};

constexpr int cell_row(int cell) { return cell / Pattern::kSide; }
constexpr int cell_col(int cell) { return cell % Pattern::kSide; }
constexpr int make_cell(int row, int col) { return row * Pattern::kSide + col; }

/// Horizontal, vertical and diagonal in-bounds neighbours, ascending.
std::vector<int> neighbors8(int cell);
/// Horizontal and vertical in-bounds neighbours, ascending.
std::vector<int> neighbors4(int cell);
bool adjacent8(int a, int b);
bool adjacent4(int a, int b);

/// Every 4-cell pattern reachable by pool generation (seed pair 8-adjacent,
/// other two cells 4-adjacent to the seed pair). Sorted by mask.
std::vector<Pattern> legal_patterns();

// ---------------------------------------------------------------------------
// Per-kernel pattern proposal. Kernel slices are 9 row-major values.

struct KernelSeedState {
  int first = -1;
  int second = -1;
  std::vector<int> candidates;  // ascending cell indices
};

/// Cell with the highest (g*w)^2; ties to the lowest row-major index.
int select_first_position(std::span<const double> weights, std::span<const double> grads);
/// Highest-scoring 8-neighbour of `first`; ties to the lowest index.
int select_second_position(std::span<const double> weights, std::span<const double> grads,
                           int first);
/// 4-neighbours of first and second, minus the two seeds.
std::vector<int> candidate_positions(int first, int second);
/// Runs the three seeding steps for one kernel.
KernelSeedState seed_kernel(std::span<const double> weights, std::span<const double> grads);

// Scores every 2-subset of the candidates joined with the two seeds and
// returns the best 4-cell pattern (lowest mask on ties). Fewer than two
// candidates widens the search to the seeds' 8-neighbourhood, then to all
// remaining cells.
Pattern propose_kernel_pattern(std::span<const double> weights, std::span<const double> grads,
                               const KernelSeedState& seed);

// ---------------------------------------------------------------------------
// Candidate pool and final pattern pool.

class CandidatePool {
 public:
  /// New pattern enters with score 1, a repeat adds 1.
  void accumulate(Pattern p);
  void merge(const CandidatePool& other);

  std::int64_t score(Pattern p) const;
  std::size_t size() const { return scores_.size(); }
  bool empty() const { return scores_.empty(); }
  std::int64_t total() const;
  const std::map<Pattern, std::int64_t>& scores() const { return scores_; }
  void set_score(Pattern p, std::int64_t score);  // checkpoint restore

  bool operator==(const CandidatePool&) const = default;

 private:
  std::map<Pattern, std::int64_t> scores_;
};

class PatternPool {
 public:
  static constexpr int kDefaultSize = 12;

  PatternPool() = default;
  /// Throws ConfigError on duplicates, wrong cardinality or size > capacity.
  PatternPool(std::vector<Pattern> patterns, int capacity);

  const std::vector<Pattern>& patterns() const { return patterns_; }
  const Pattern& operator[](std::size_t i) const { return patterns_.at(i); }
  std::size_t size() const { return patterns_.size(); }
  bool empty() const { return patterns_.empty(); }
  int capacity() const { return capacity_; }
  /// Index of `p`, or -1.
  int find(Pattern p) const;

  /// JSON array of masks, e.g. "[27,54]".
  std::string to_json() const;
  static PatternPool from_json(const std::string& text, int capacity);

  bool operator==(const PatternPool&) const = default;

 private:
  std::vector<Pattern> patterns_;
  int capacity_ = kDefaultSize;
};

/// Top-`n` patterns by score, ties by canonical order. Throws ConfigError on an
/// empty pool or n < 1.
PatternPool finalize_pool(const CandidatePool& pool, int n);

}  // namespace pattrain

#endif  // PATTRAIN_PATTERN_HPP_
