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

// Thread-to-socket placement policies.
//
// near_linear_schedule is the greedy top-k pipeline: sockets are filled in
// ascending order, socket i reusing its precomputed top-((i+1)*C) candidates
// when they already cover every thread placed on sockets 0..i-1, and
// re-selecting its top C among the unassigned threads otherwise. The last
// socket takes whatever is left.
//
// The remaining policies are comparison points: two count-oblivious baselines
// (static_hold, round_robin), a seeded random placement, and two exact
// optimizers for the local-access objective (a capacity-replicated assignment
// solver and exhaustive enumeration for tiny instances).

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "numasched/core.hpp"
#include "numasched/selection.hpp"

namespace numasched {

enum class PolicyKind {
  near_linear,
  static_hold,
  round_robin,
  random,
  optimal_assignment,
  brute_force,
};

inline constexpr std::array<PolicyKind, 6> kAllPolicies = {
    PolicyKind::near_linear,        PolicyKind::static_hold, PolicyKind::round_robin,
    PolicyKind::random,             PolicyKind::optimal_assignment,
    PolicyKind::brute_force,
};

inline constexpr std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::near_linear: return "near_linear";
    case PolicyKind::static_hold: return "static_hold";
    case PolicyKind::round_robin: return "round_robin";
    case PolicyKind::random: return "random";
    case PolicyKind::optimal_assignment: return "optimal_assignment";
    case PolicyKind::brute_force: return "brute_force";
  }
  return "unknown";
}

inline std::optional<PolicyKind> parse_policy(std::string_view name) {
  for (PolicyKind kind : kAllPolicies) {
    if (policy_name(kind) == name) return kind;
  }
  return std::nullopt;
}

// Comma-separated list of every policy name, for usage messages.
inline std::string policy_names() {
  std::string out;
  for (PolicyKind kind : kAllPolicies) {
    if (!out.empty()) out += ", ";
    out += policy_name(kind);
  }
  return out;
}

struct ScheduleStats {
  std::size_t selection_calls = 0;
  std::size_t recomputations = 0;

  friend bool operator==(const ScheduleStats&, const ScheduleStats&) = default;
};

struct NearLinearOptions {
  // Run the per-socket candidate selections on separate threads. Output is
  // identical either way.
  bool concurrent_candidates = false;
  // Optional sink for comparison counts across all selections.
  SelectionStats* selection_stats = nullptr;
};

namespace detail {

inline void require_full_population(const AccessMatrix& matrix, const Topology& topology) {
  if (matrix.sockets() != topology.sockets()) {
    throw DimensionError("matrix has " + std::to_string(matrix.sockets()) +
                         " socket columns, topology has " + std::to_string(topology.sockets()));
  }
  if (matrix.threads() != topology.capacity()) {
    throw DimensionError("matrix has " + std::to_string(matrix.threads()) +
                         " threads, topology requires exactly " +
                         std::to_string(topology.capacity()));
  }
}

}  // namespace detail

inline std::pair<Schedule, ScheduleStats> near_linear_schedule(
    const AccessMatrix& matrix, const Topology& topology, const NearLinearOptions& options = {}) {
  detail::require_full_population(matrix, topology);
  const std::size_t sockets = topology.sockets();
  const std::size_t cores = topology.cores_per_socket();
  const std::size_t threads = matrix.threads();

  constexpr SocketId kUnassigned = std::numeric_limits<SocketId>::max();
  std::vector<SocketId> assignment(threads, kUnassigned);
  ScheduleStats stats;
  if (sockets == 1) {
    std::fill(assignment.begin(), assignment.end(), SocketId{0});
    return {Schedule(std::move(assignment)), stats};
  }

  // Candidate precomputation for sockets 0..K-2. Each task reads one column.
  const std::size_t ranked_sockets = sockets - 1;
  std::vector<std::vector<RankedEntry>> columns(ranked_sockets);
  std::vector<std::vector<ThreadId>> candidates(ranked_sockets);
  std::vector<SelectionStats> candidate_stats(ranked_sockets);
  auto precompute = [&](std::size_t s) {
    columns[s] = column_entries(matrix, s);
    candidates[s] = select_top_k(columns[s], (s + 1) * cores, &candidate_stats[s]);
  };
  if (options.concurrent_candidates) {
    std::vector<std::future<void>> tasks;
    tasks.reserve(ranked_sockets);
    for (std::size_t s = 0; s < ranked_sockets; ++s) {
      tasks.push_back(std::async(std::launch::async, precompute, s));
    }
    for (auto& task : tasks) task.get();
  } else {
    for (std::size_t s = 0; s < ranked_sockets; ++s) precompute(s);
  }
  stats.selection_calls = ranked_sockets;
  SelectionStats recompute_stats;

  std::size_t assigned_count = 0;
  for (std::size_t s = 0; s < ranked_sockets; ++s) {
    const auto& candidate = candidates[s];
    // Every assigned thread sits in candidate iff the candidate holds
    // exactly assigned_count of them.
    std::size_t covered = 0;
    for (ThreadId t : candidate) {
      if (assignment[t] != kUnassigned) ++covered;
    }
    if (covered == assigned_count) {
      for (ThreadId t : candidate) {
        if (assignment[t] == kUnassigned) assignment[t] = static_cast<SocketId>(s);
      }
    } else {
      const auto picked = select_top_k_if(
          columns[s], cores,
          [&](const RankedEntry& e) { return assignment[e.thread] == kUnassigned; },
          &recompute_stats);
      for (ThreadId t : picked) assignment[t] = static_cast<SocketId>(s);
      ++stats.recomputations;
      ++stats.selection_calls;
    }
    assigned_count += cores;

    columns[s].clear();
    columns[s].shrink_to_fit();
  }

  const SocketId last = static_cast<SocketId>(sockets - 1);
  for (auto& socket : assignment) {
    if (socket == kUnassigned) socket = last;
  }

  if (options.selection_stats != nullptr) {
    for (const auto& cs : candidate_stats) options.selection_stats->comparisons += cs.comparisons;
    options.selection_stats->comparisons += recompute_stats.comparisons;
  }
  return {Schedule(std::move(assignment)), stats};
}

inline Schedule static_hold_schedule(const Schedule& previous) { return previous; }

inline Schedule round_robin_schedule(const Topology& topology) {
  std::vector<SocketId> assignment(topology.capacity());
  for (std::size_t t = 0; t < assignment.size(); ++t) {
    assignment[t] = static_cast<SocketId>(t % topology.sockets());
  }
  return Schedule(std::move(assignment));
}

namespace detail {

// Unbiased draw from [0, bound) by rejection, independent of the standard
// library's distribution implementations.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace detail

// Uniform random balanced partition: Fisher-Yates shuffle of the thread ids,
// then consecutive blocks of C go to sockets 0, 1, ...
inline Schedule random_schedule(const Topology& topology, std::uint64_t seed) {
  const std::size_t n = topology.capacity();
  std::vector<ThreadId> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<ThreadId>(i);
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = detail::uniform_below(rng, i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<SocketId> assignment(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    assignment[order[pos]] = static_cast<SocketId>(pos / topology.cores_per_socket());
  }
  return Schedule(std::move(assignment));
}

// Exact maximizer of local accesses. Each socket is expanded into C unit
// slots and the resulting square assignment problem is solved with the
// shortest-augmenting-path Hungarian method, O(N^3).
inline Schedule optimal_schedule(const AccessMatrix& matrix, const Topology& topology) {
  detail::require_full_population(matrix, topology);
  using Wide = __int128;
  const std::size_t n = matrix.threads();
  const std::size_t cores = topology.cores_per_socket();
  const Wide kInf = static_cast<Wide>(1) << 100;
  auto cost = [&](std::size_t row, std::size_t col) -> Wide {
    return -static_cast<Wide>(matrix.at(row - 1, (col - 1) / cores));
  };

  // 1-based potentials; slot_owner[j] is the thread holding slot j.
  std::vector<Wide> row_pot(n + 1, 0), col_pot(n + 1, 0);
  std::vector<std::size_t> slot_owner(n + 1, 0), way(n + 1, 0);
  std::vector<Wide> min_slack(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    slot_owner[0] = i;
    std::size_t j0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = slot_owner[j0];
      Wide delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const Wide reduced = cost(i0, j) - row_pot[i0] - col_pot[j];
        if (reduced < min_slack[j]) {
          min_slack[j] = reduced;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          row_pot[slot_owner[j]] += delta;
          col_pot[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (slot_owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      slot_owner[j0] = slot_owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<SocketId> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) {
    assignment[slot_owner[j] - 1] = static_cast<SocketId>((j - 1) / cores);
  }
  return Schedule(std::move(assignment));
}

inline constexpr std::uint64_t kBruteForceLimit = 10'000'000;

// N! / (C!)^K, saturating at limit + 1.
inline std::uint64_t partition_count(const Topology& topology,
                                     std::uint64_t limit = kBruteForceLimit) {
  const std::uint64_t cap = limit + 1;
  std::uint64_t total = 1;
  std::uint64_t remaining = topology.capacity();
  for (std::size_t s = 0; s < topology.sockets(); ++s) {
    // Multiply by binomial(remaining, C), built incrementally so every
    // intermediate stays an exact integer.
    std::uint64_t binom = 1;
    for (std::uint64_t i = 1; i <= topology.cores_per_socket(); ++i) {
      const unsigned __int128 next =
          static_cast<unsigned __int128>(binom) * (remaining - topology.cores_per_socket() + i) / i;
      if (next >= cap) return cap;
      binom = static_cast<std::uint64_t>(next);
    }
    const unsigned __int128 product = static_cast<unsigned __int128>(total) * binom;
    if (product >= cap) return cap;
    total = static_cast<std::uint64_t>(product);
    remaining -= topology.cores_per_socket();
  }
  return total;
}

class InstanceTooLarge : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Enumerates every balanced partition in lexicographic order of the
// assignment vector and keeps the first with the most local accesses.
// `enumerated`, when given, receives the number of complete partitions seen.
inline Schedule brute_force_schedule(const AccessMatrix& matrix, const Topology& topology,
                                     std::uint64_t* enumerated = nullptr) {
  detail::require_full_population(matrix, topology);
  if (partition_count(topology) > kBruteForceLimit) {
    throw InstanceTooLarge("brute force limited to " + std::to_string(kBruteForceLimit) +
                           " partitions; instance with " + std::to_string(topology.sockets()) +
                           " sockets x " + std::to_string(topology.cores_per_socket()) +
                           " cores is larger");
  }
  using Wide = unsigned __int128;
  const std::size_t n = matrix.threads();
  const std::size_t sockets = topology.sockets();
  std::vector<std::size_t> free_slots(sockets, topology.cores_per_socket());
  std::vector<SocketId> current(n), best;
  Wide best_local = 0;
  std::uint64_t leaves = 0;

  std::function<void(std::size_t, Wide)> visit = [&](std::size_t t, Wide local) {
    if (t == n) {
      ++leaves;
      if (best.empty() || local > best_local) {
        best_local = local;
        best = current;
      }
      return;
    }
    for (std::size_t s = 0; s < sockets; ++s) {
      if (free_slots[s] == 0) continue;
      --free_slots[s];
      current[t] = static_cast<SocketId>(s);
      visit(t + 1, local + matrix.at(t, s));
      ++free_slots[s];
    }
  };
  visit(0, 0);
  if (enumerated != nullptr) *enumerated = leaves;
  return Schedule(std::move(best));
}

// Everything a policy may observe when choosing the next placement.
struct PolicyInput {
  const Schedule& previous;
  const AccessMatrix& observed;
  const Topology& topology;
  std::uint64_t seed;
};

struct PolicyDecision {
  Schedule schedule;
  ScheduleStats stats;
};

inline PolicyDecision apply_policy(PolicyKind kind, const PolicyInput& input,
                                   const NearLinearOptions& options = {}) {
  switch (kind) {
    case PolicyKind::near_linear: {
      auto [schedule, stats] = near_linear_schedule(input.observed, input.topology, options);
      return {std::move(schedule), stats};
    }
    case PolicyKind::static_hold:
      return {static_hold_schedule(input.previous), {}};
    case PolicyKind::round_robin:
      return {round_robin_schedule(input.topology), {}};
    case PolicyKind::random:
      return {random_schedule(input.topology, input.seed), {}};
    case PolicyKind::optimal_assignment:
      return {optimal_schedule(input.observed, input.topology), {}};
    case PolicyKind::brute_force:
      return {brute_force_schedule(input.observed, input.topology), {}};
  }
  throw std::invalid_argument("unknown policy");
}

}  // namespace numasched
