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

// Quantum-stepped evaluation of placement policies over a trace.

#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <future>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "numasched/core.hpp"
#include "numasched/scheduler.hpp"
#include "numasched/workload.hpp"

namespace numasched {

// reactive: quantum q is placed using the counts observed in quantum q-1
// (quantum 0 keeps the initial placement). clairvoyant: quantum q is placed
// using its own counts.
enum class ScoringMode { reactive, clairvoyant };

inline constexpr std::string_view scoring_mode_name(ScoringMode mode) {
  return mode == ScoringMode::reactive ? "reactive" : "clairvoyant";
}

inline std::optional<ScoringMode> parse_scoring_mode(std::string_view name) {
  if (name == "reactive") return ScoringMode::reactive;
  if (name == "clairvoyant") return ScoringMode::clairvoyant;
  return std::nullopt;
}

struct RunOptions {
  ScoringMode mode = ScoringMode::reactive;
  NearLinearOptions near_linear{};
};

struct RunTotals {
  Count local = 0;
  Count remote = 0;
  std::size_t migrations = 0;
  std::size_t selection_calls = 0;
  std::size_t recomputations = 0;

  friend bool operator==(const RunTotals&, const RunTotals&) = default;
};

struct RunResult {
  PolicyKind policy = PolicyKind::near_linear;
  Topology topology{1, 1};
  std::vector<QuantumMetrics> per_quantum;
  std::vector<Schedule> schedules;
  RunTotals totals;

  std::size_t quanta() const { return per_quantum.size(); }
  double remote_fraction() const {
    const Count all = checked_add(totals.local, totals.remote);
    return all == 0 ? 0.0 : static_cast<double>(totals.remote) / static_cast<double>(all);
  }
  friend bool operator==(const RunResult&, const RunResult&) = default;
};

// Per-quantum seed handed to the policy, derived from the run seed.
inline std::uint64_t quantum_seed(std::uint64_t run_seed, std::size_t quantum) {
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(quantum) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline RunResult run(const Trace& trace, PolicyKind policy, const Schedule& initial,
                     std::uint64_t seed, const RunOptions& options = {}) {
  const Topology& topology = trace.topology;
  if (auto violation = validate_schedule(initial, topology)) {
    throw DimensionError("initial schedule invalid: " + *violation);
  }
  for (const AccessMatrix& m : trace.matrices) {
    if (m.threads() != topology.capacity() || m.sockets() != topology.sockets()) {
      throw DimensionError("trace matrix dimensions disagree with its topology");
    }
  }
  if (policy == PolicyKind::brute_force && partition_count(topology) > kBruteForceLimit) {
    throw InstanceTooLarge("brute_force policy refused: more than " +
                           std::to_string(kBruteForceLimit) + " partitions");
  }

  RunResult result;
  result.policy = policy;
  result.topology = topology;
  result.per_quantum.reserve(trace.quanta());
  result.schedules.reserve(trace.quanta());

  const Schedule* previous = &initial;
  for (std::size_t q = 0; q < trace.quanta(); ++q) {
    PolicyDecision decision{initial, {}};
    const AccessMatrix* observed = nullptr;
    if (options.mode == ScoringMode::clairvoyant) {
      observed = &trace.matrices[q];
    } else if (q > 0) {
      observed = &trace.matrices[q - 1];
    }
    if (observed != nullptr) {
      decision = apply_policy(policy, PolicyInput{*previous, *observed, topology, quantum_seed(seed, q)},
                              options.near_linear);
    }

    const LocalityCost cost = locality_cost(trace.matrices[q], decision.schedule);
    QuantumMetrics metrics;
    metrics.local_accesses = cost.local;
    metrics.remote_accesses = cost.remote;
    metrics.migrations = count_migrations(*previous, decision.schedule, trace.threads);
    metrics.selection_calls = decision.stats.selection_calls;
    metrics.recomputations = decision.stats.recomputations;

    result.totals.local = checked_add(result.totals.local, metrics.local_accesses);
    result.totals.remote = checked_add(result.totals.remote, metrics.remote_accesses);
    result.totals.migrations += metrics.migrations;
    result.totals.selection_calls += metrics.selection_calls;
    result.totals.recomputations += metrics.recomputations;
    result.per_quantum.push_back(metrics);
    result.schedules.push_back(std::move(decision.schedule));
    previous = &result.schedules.back();
  }
  return result;
}

// One run per policy over the same trace and initial placement. Runs share
// only immutable inputs, so `parallel` executes them concurrently.
inline std::vector<RunResult> compare(const Trace& trace, const std::vector<PolicyKind>& policies,
                                      const Schedule& initial, std::uint64_t seed,
                                      const RunOptions& options = {}, bool parallel = false) {
  std::vector<RunResult> results;
  results.reserve(policies.size());
  if (!parallel) {
    for (PolicyKind p : policies) results.push_back(run(trace, p, initial, seed, options));
    return results;
  }
  std::vector<std::future<RunResult>> pending;
  pending.reserve(policies.size());
  for (PolicyKind p : policies) {
    pending.push_back(std::async(std::launch::async, [&, p] {
      return run(trace, p, initial, seed, options);
    }));
  }
  for (auto& f : pending) results.push_back(f.get());
  return results;
}

inline constexpr std::string_view kRunHeader =
    "quantum,policy,local,remote,migrations,selection_calls,recomputations";

inline void write_run_rows(const RunResult& result, std::ostream& out) {
  const std::string_view name = policy_name(result.policy);
  for (std::size_t q = 0; q < result.per_quantum.size(); ++q) {
    const QuantumMetrics& m = result.per_quantum[q];
    out << q << ',' << name << ',' << m.local_accesses << ',' << m.remote_accesses << ','
        << m.migrations << ',' << m.selection_calls << ',' << m.recomputations << '\n';
  }
  const RunTotals& t = result.totals;
  out << "TOTAL," << name << ',' << t.local << ',' << t.remote << ',' << t.migrations << ','
      << t.selection_calls << ',' << t.recomputations << '\n';
}

inline void write_run_result(const RunResult& result, std::ostream& out) {
  out << kRunHeader << '\n';
  write_run_rows(result, out);
}

inline std::string format_fraction(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  return buf;
}

// Combined table (one header, every policy's rows and TOTAL line), a blank
// line, then a summary with one line per policy. The gap column is the
// remote-access excess over optimal_assignment, present only when that
// policy was compared.
inline void write_comparison(const std::vector<RunResult>& results, std::ostream& out) {
  out << kRunHeader << '\n';
  for (const RunResult& r : results) write_run_rows(r, out);

  std::optional<Count> optimal_remote;
  for (const RunResult& r : results) {
    if (r.policy == PolicyKind::optimal_assignment) optimal_remote = r.totals.remote;
  }
  out << '\n' << "policy,remote_fraction,remote" << (optimal_remote ? ",gap_vs_optimal" : "")
      << '\n';
  for (const RunResult& r : results) {
    out << policy_name(r.policy) << ',' << format_fraction(r.remote_fraction()) << ','
        << r.totals.remote;
    if (optimal_remote) {
      // Signed: in reactive mode a policy can beat the optimizer, which only
      // ever sees the previous quantum's counts.
      if (r.totals.remote >= *optimal_remote) {
        out << ',' << r.totals.remote - *optimal_remote;
      } else {
        out << ",-" << *optimal_remote - r.totals.remote;
      }
    }
    out << '\n';
  }
}

}  // namespace numasched
