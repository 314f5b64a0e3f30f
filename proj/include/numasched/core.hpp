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

// Topology, access-count and schedule data model, plus locality arithmetic.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace numasched {

using Count = std::uint64_t;
using ThreadId = std::uint32_t;
using SocketId = std::uint32_t;

// Raised for shape mismatches and contract violations on the data model.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline Count checked_add(Count a, Count b) {
  if (b > std::numeric_limits<Count>::max() - a) {
    throw std::overflow_error("access count accumulation overflows 64 bits");
  }
  return a + b;
}

class Topology {
 public:
  Topology(std::size_t sockets, std::size_t cores_per_socket)
      : sockets_(sockets), cores_per_socket_(cores_per_socket) {
    if (sockets == 0 || cores_per_socket == 0) {
      throw DimensionError("topology needs at least one socket and one core per socket");
    }
    if (sockets > std::numeric_limits<SocketId>::max() ||
        cores_per_socket > std::numeric_limits<ThreadId>::max() / sockets) {
      throw DimensionError("topology too large");
    }
  }

  std::size_t sockets() const { return sockets_; }
  std::size_t cores_per_socket() const { return cores_per_socket_; }
  // Number of schedulable threads: one per core.
  std::size_t capacity() const { return sockets_ * cores_per_socket_; }

  friend bool operator==(const Topology&, const Topology&) = default;

 private:
  std::size_t sockets_;
  std::size_t cores_per_socket_;
};

// Row-major threads x sockets table of DRAM access counts for one quantum.
class AccessMatrix {
 public:
  AccessMatrix() = default;
  AccessMatrix(std::size_t threads, std::size_t sockets)
      : threads_(threads), sockets_(sockets), counts_(threads * sockets, 0) {
    if (sockets == 0) throw DimensionError("access matrix needs at least one socket column");
  }
  AccessMatrix(std::initializer_list<std::initializer_list<Count>> rows) {
    threads_ = rows.size();
    sockets_ = rows.size() == 0 ? 0 : rows.begin()->size();
    if (sockets_ == 0) throw DimensionError("access matrix needs at least one socket column");
    counts_.reserve(threads_ * sockets_);
    for (const auto& row : rows) {
      if (row.size() != sockets_) throw DimensionError("ragged access matrix rows");
      counts_.insert(counts_.end(), row.begin(), row.end());
    }
  }

  std::size_t threads() const { return threads_; }
  std::size_t sockets() const { return sockets_; }

  Count at(std::size_t thread, std::size_t socket) const {
    return counts_[thread * sockets_ + socket];
  }
  Count& at(std::size_t thread, std::size_t socket) {
    return counts_[thread * sockets_ + socket];
  }
  std::span<const Count> row(std::size_t thread) const {
    return {counts_.data() + thread * sockets_, sockets_};
  }

  Count row_total(std::size_t thread) const {
    Count sum = 0;
    for (Count c : row(thread)) sum = checked_add(sum, c);
    return sum;
  }
  Count grand_total() const {
    Count sum = 0;
    for (Count c : counts_) sum = checked_add(sum, c);
    return sum;
  }

  friend bool operator==(const AccessMatrix&, const AccessMatrix&) = default;

 private:
  std::size_t threads_ = 0;
  std::size_t sockets_ = 0;
  std::vector<Count> counts_;
};

// Total mapping thread -> socket. Thread ids are the vector indices, so a
// Schedule can not name a thread twice; capacity is checked separately by
// validate_schedule.
class Schedule {
 public:
  Schedule() = default;
  explicit Schedule(std::vector<SocketId> assignment) : assignment_(std::move(assignment)) {}

  // Builds a schedule from explicit (thread, socket) pairs over `threads`
  // threads. Throws DimensionError on a duplicate or missing thread.
  static Schedule from_pairs(std::span<const std::pair<ThreadId, SocketId>> pairs,
                             std::size_t threads) {
    constexpr SocketId kUnset = std::numeric_limits<SocketId>::max();
    std::vector<SocketId> assignment(threads, kUnset);
    for (const auto& [thread, socket] : pairs) {
      if (thread >= threads) {
        throw DimensionError("thread " + std::to_string(thread) + " out of range");
      }
      if (assignment[thread] != kUnset) {
        throw DimensionError("duplicate thread " + std::to_string(thread));
      }
      assignment[thread] = socket;
    }
    for (std::size_t t = 0; t < threads; ++t) {
      if (assignment[t] == kUnset) throw DimensionError("missing thread " + std::to_string(t));
    }
    return Schedule(std::move(assignment));
  }

  std::size_t threads() const { return assignment_.size(); }
  SocketId socket_of(std::size_t thread) const { return assignment_[thread]; }
  std::span<const SocketId> assignment() const { return assignment_; }

  friend bool operator==(const Schedule&, const Schedule&) = default;

 private:
  std::vector<SocketId> assignment_;
};

struct LocalityCost {
  Count local = 0;
  Count remote = 0;

  Count total() const { return checked_add(local, remote); }
  friend bool operator==(const LocalityCost&, const LocalityCost&) = default;
};

struct QuantumMetrics {
  Count local_accesses = 0;
  Count remote_accesses = 0;
  std::size_t migrations = 0;
  std::size_t selection_calls = 0;
  std::size_t recomputations = 0;

  friend bool operator==(const QuantumMetrics&, const QuantumMetrics&) = default;
};

// Returns nullopt when `schedule` places exactly cores_per_socket threads on
// each socket of `topology`, otherwise a description of the first violation.
inline std::optional<std::string> validate_schedule(const Schedule& schedule,
                                                    const Topology& topology) {
  const std::size_t expected = topology.capacity();
  if (schedule.threads() < expected) {
    return "missing thread " + std::to_string(schedule.threads()) + " (schedule covers " +
           std::to_string(schedule.threads()) + " of " + std::to_string(expected) + " threads)";
  }
  if (schedule.threads() > expected) {
    return "unexpected thread " + std::to_string(expected) + " (topology holds " +
           std::to_string(expected) + " threads)";
  }
  std::vector<std::size_t> load(topology.sockets(), 0);
  for (std::size_t t = 0; t < schedule.threads(); ++t) {
    const SocketId s = schedule.socket_of(t);
    if (s >= topology.sockets()) {
      return "thread " + std::to_string(t) + " assigned to nonexistent socket " + std::to_string(s);
    }
    ++load[s];
  }
  for (std::size_t s = 0; s < load.size(); ++s) {
    if (load[s] > topology.cores_per_socket()) {
      return "socket " + std::to_string(s) + " over capacity (" + std::to_string(load[s]) + " > " +
             std::to_string(topology.cores_per_socket()) + ")";
    }
  }
  for (std::size_t s = 0; s < load.size(); ++s) {
    if (load[s] < topology.cores_per_socket()) {
      return "socket " + std::to_string(s) + " under capacity (" + std::to_string(load[s]) +
             " < " + std::to_string(topology.cores_per_socket()) + ")";
    }
  }
  return std::nullopt;
}

// Local accesses are those a thread makes to DRAM homed on its assigned socket;
// every other access is remote, independent of hop distance.
inline LocalityCost locality_cost(const AccessMatrix& matrix, const Schedule& schedule) {
  if (matrix.threads() != schedule.threads()) {
    throw DimensionError("matrix has " + std::to_string(matrix.threads()) +
                         " threads but schedule has " + std::to_string(schedule.threads()));
  }
  LocalityCost cost;
  for (std::size_t t = 0; t < matrix.threads(); ++t) {
    const SocketId home = schedule.socket_of(t);
    if (home >= matrix.sockets()) {
      throw DimensionError("schedule names socket " + std::to_string(home) +
                           " beyond matrix width " + std::to_string(matrix.sockets()));
    }
    const auto row = matrix.row(t);
    for (std::size_t s = 0; s < row.size(); ++s) {
      if (s == home) {
        cost.local = checked_add(cost.local, row[s]);
      } else {
        cost.remote = checked_add(cost.remote, row[s]);
      }
    }
  }
  return cost;
}

// Counts threads placed differently by the two schedules. `limit` restricts
// the comparison to the first `limit` threads (used to skip padding threads).
inline std::size_t count_migrations(const Schedule& previous, const Schedule& next,
                                    std::optional<std::size_t> limit = std::nullopt) {
  if (previous.threads() != next.threads()) {
    throw DimensionError("schedules cover different thread populations (" +
                         std::to_string(previous.threads()) + " vs " +
                         std::to_string(next.threads()) + ")");
  }
  const std::size_t n = limit ? std::min(*limit, next.threads()) : next.threads();
  std::size_t moved = 0;
  for (std::size_t t = 0; t < n; ++t) {
    if (previous.socket_of(t) != next.socket_of(t)) ++moved;
  }
  return moved;
}

}  // namespace numasched
