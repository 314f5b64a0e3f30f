/* Copyright 2026 The numasched Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Expected-linear top-k selection over (thread, count) pairs.
//
// Entries are ranked by descending count, with the lower thread id winning
// ties, so every input has exactly one top-k set. The selection partitions
// around seeded random pivots (quickselect) and never sorts.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "numasched/core.hpp"

namespace numasched {

struct RankedEntry {
  ThreadId thread = 0;
  Count count = 0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

// Strict total order used by every selection: `a` ranks ahead of `b`.
constexpr bool precedes(const RankedEntry& a, const RankedEntry& b) {
  return a.count > b.count || (a.count == b.count && a.thread < b.thread);
}

class SelectionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct SelectionStats {
  std::uint64_t comparisons = 0;
};

inline constexpr std::uint64_t kDefaultPivotSeed = 0x5eed'cafe'f00d'1234ULL;

namespace detail {

// splitmix64; cheap and fully specified, so pivot sequences are reproducible.
class PivotRng {
 public:
  explicit PivotRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::size_t below(std::size_t bound) {
    // Multiply-shift range reduction; bias is < bound / 2^64.
    return static_cast<std::size_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  std::uint64_t state_;
};

// Rearranges `work` so that its first k slots hold the k highest-ranked entries.
inline void quickselect_prefix(std::vector<RankedEntry>& work, std::size_t k,
                               std::uint64_t pivot_seed, SelectionStats* stats) {
  std::uint64_t comparisons = 0;
  PivotRng rng(pivot_seed);
  std::size_t lo = 0;
  std::size_t hi = work.size();
  while (hi - lo > 1) {
    const std::size_t pick = lo + rng.below(hi - lo);
    std::swap(work[pick], work[hi - 1]);
    const RankedEntry pivot = work[hi - 1];
    std::size_t store = lo;
    for (std::size_t i = lo; i + 1 < hi; ++i) {
      ++comparisons;
      if (precedes(work[i], pivot)) std::swap(work[i], work[store++]);
    }
    std::swap(work[store], work[hi - 1]);
    // work[0, store) now holds exactly the `store` best entries.
    if (store == k || store + 1 == k) break;
    if (store + 1 < k) {
      lo = store + 1;
    } else {
      hi = store;
    }
  }
  if (stats != nullptr) stats->comparisons += comparisons;
}

}  // namespace detail

// Top-k over the entries for which keep(entry) holds. Result order is
// unspecified.
template <typename Keep>
std::vector<ThreadId> select_top_k_if(std::span<const RankedEntry> entries, std::size_t k,
                                      Keep&& keep, SelectionStats* stats = nullptr,
                                      std::uint64_t pivot_seed = kDefaultPivotSeed) {
  if (k == 0) throw SelectionError("top-k selection requires k >= 1");
  std::vector<RankedEntry> work;
  work.reserve(entries.size());
  for (const RankedEntry& e : entries) {
    if (keep(e)) work.push_back(e);
  }
  if (k > work.size()) {
    throw SelectionError("cannot select top " + std::to_string(k) + " of " +
                         std::to_string(work.size()) + " remaining entries");
  }
  if (k < work.size()) detail::quickselect_prefix(work, k, pivot_seed, stats);
  std::vector<ThreadId> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(work[i].thread);
  return out;
}

inline std::vector<ThreadId> select_top_k(std::span<const RankedEntry> entries, std::size_t k,
                                          SelectionStats* stats = nullptr,
                                          std::uint64_t pivot_seed = kDefaultPivotSeed) {
  return select_top_k_if(entries, k, [](const RankedEntry&) { return true; }, stats, pivot_seed);
}

inline std::vector<ThreadId> select_top_k_excluding(std::span<const RankedEntry> entries,
                                                    std::size_t k,
                                                    const std::unordered_set<ThreadId>& excluded,
                                                    SelectionStats* stats = nullptr,
                                                    std::uint64_t pivot_seed = kDefaultPivotSeed) {
  return select_top_k_if(
      entries, k, [&](const RankedEntry& e) { return !excluded.contains(e.thread); }, stats,
      pivot_seed);
}

// Column `socket` of `matrix` as ranked entries, one per thread.
inline std::vector<RankedEntry> column_entries(const AccessMatrix& matrix, std::size_t socket) {
  std::vector<RankedEntry> entries;
  entries.reserve(matrix.threads());
  for (std::size_t t = 0; t < matrix.threads(); ++t) {
    entries.push_back({static_cast<ThreadId>(t), matrix.at(t, socket)});
  }
  return entries;
}

}  // namespace numasched
