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

// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "numasched/numasched.hpp"
#include "oracles.hpp"

using namespace numasched;
namespace nt = numasched::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;  // 0 = no limit
  std::function<Verdict()> body;
};

std::vector<RankedEntry> random_entries(std::mt19937_64& rng, std::size_t n) {
  std::vector<RankedEntry> out(n);
  std::vector<ThreadId> ids(n);
  std::iota(ids.begin(), ids.end(), ThreadId{0});
  std::shuffle(ids.begin(), ids.end(), rng);
  const Count spread = 1 + rng() % 8;  // few distinct counts: many ties
  for (std::size_t i = 0; i < n; ++i) out[i] = {ids[i], rng() % spread};
  return out;
}

Verdict selection_oracle() {
  Verdict v;
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 512;
    const auto input = random_entries(rng, n);
    const std::size_t k = 1 + rng() % n;
    v.require(nt::as_set(select_top_k(input, k)) == nt::sorted_top_k(input, k),
              "mismatch at trial " + std::to_string(trial));
  }
  return v;
}

const std::vector<std::size_t> kSocketGrid = {1, 2, 3, 4, 8};
const std::vector<std::size_t> kCoreGrid = {1, 2, 4};

std::size_t max_recompute_seen = 0;
bool recompute_bound_held = true;

void track_stats(const ScheduleStats& stats, std::size_t k) {
  max_recompute_seen = std::max(max_recompute_seen, stats.recomputations);
  const std::size_t bound = k >= 2 ? k - 2 : 0;
  if (stats.recomputations > bound || stats.selection_calls != (k - 1) + stats.recomputations) {
    recompute_bound_held = false;
  }
}

Verdict schedule_validity() {
  Verdict v;
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = kSocketGrid[trial % kSocketGrid.size()];
    const std::size_t c = kCoreGrid[(trial / kSocketGrid.size()) % kCoreGrid.size()];
    const Topology topo(k, c);
    const AccessMatrix m = trial % 2 ? nt::skewed_matrix(rng, k * c, k)
                                     : nt::random_matrix(rng, k * c, k, 1 + rng() % 1000);
    const Schedule previous = random_schedule(topo, rng());
    for (PolicyKind kind : kAllPolicies) {
      if (kind == PolicyKind::brute_force && partition_count(topo) > kBruteForceLimit) continue;
      const PolicyDecision d = apply_policy(kind, PolicyInput{previous, m, topo, rng()});
      const auto violation = validate_schedule(d.schedule, topo);
      v.require(!violation, std::string(policy_name(kind)) + " K=" + std::to_string(k) +
                                " C=" + std::to_string(c) + ": " + violation.value_or(""));
      if (kind == PolicyKind::near_linear) track_stats(d.stats, k);
    }
  }
  return v;
}

Verdict tiny_optimality() {
  Verdict v;
  std::mt19937_64 rng(3);
  const Topology topo(3, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const AccessMatrix m = nt::random_matrix(rng, 6, 3, trial % 2 ? 5 : 1'000'000);
    std::uint64_t enumerated = 0;
    const Count brute = locality_cost(m, brute_force_schedule(m, topo, &enumerated)).local;
    const Count opt = locality_cost(m, optimal_schedule(m, topo)).local;
    v.require(enumerated == 90, "enumerated " + std::to_string(enumerated) + " partitions");
    v.require(brute == opt, "trial " + std::to_string(trial) + ": brute " + std::to_string(brute) +
                                " != optimal " + std::to_string(opt));
  }
  return v;
}

Verdict best_case() {
  Verdict v;
  for (std::size_t k : {2u, 3u, 4u, 8u}) {
    for (std::size_t c : {1u, 2u, 4u}) {
      const AccessMatrix m = nt::best_case_matrix(k, c);
      const auto [schedule, stats] = near_linear_schedule(m, Topology(k, c));
      const std::string at = " at K=" + std::to_string(k) + " C=" + std::to_string(c);
      v.require(stats.recomputations == 0, "recomputations != 0" + at);
      v.require(stats.selection_calls == k - 1, "selection_calls != K-1" + at);
      if (k == 4 && c == 4) {
        v.require(locality_cost(m, schedule).local == nt::dp_optimal_local(m, c),
                  "K=4 C=4 fixture not optimal");
      }
    }
  }
  return v;
}

Verdict worst_case() {
  Verdict v;
  for (std::size_t k : {3u, 4u, 8u}) {
    for (std::size_t c : {1u, 2u, 4u}) {
      const auto stats = near_linear_schedule(nt::adversarial_matrix(k, c), Topology(k, c)).second;
      v.require(stats.recomputations == k - 2,
                "K=" + std::to_string(k) + " C=" + std::to_string(c) + " recomputations " +
                    std::to_string(stats.recomputations));
      track_stats(stats, k);
    }
  }
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t k = 1 + rng() % 8;
    const std::size_t c = 1 + rng() % 6;
    const AccessMatrix m = nt::random_matrix(rng, k * c, k, trial % 3 == 0 ? 2 : 500);
    track_stats(near_linear_schedule(m, Topology(k, c)).second, k);
  }
  v.require(recompute_bound_held, "recomputations exceeded K-2 on a randomized run");
  std::printf("      max recomputations observed in randomized runs: %zu\n", max_recompute_seen);
  return v;
}

Verdict dominant_home() {
  Verdict v;
  for (std::size_t k : {2u, 3u, 4u}) {
    for (double eps : {0.0, 0.1, 0.2}) {
      WorkloadSpec spec;
      spec.sockets = k;
      spec.cores_per_socket = 4;
      spec.threads = 4 * k;
      spec.quanta = 10;
      spec.locality = eps;
      spec.accesses_per_thread = 1000;
      spec.phase_period = 3;
      spec.noise = 0.5;
      spec.seed = 17 + k;
      const Trace trace = generate(spec);
      const std::string at = " K=" + std::to_string(k) + " eps=" + std::to_string(eps);
      for (const AccessMatrix& m : trace.matrices) {
        const Schedule greedy = near_linear_schedule(m, trace.topology).first;
        const Schedule best = optimal_schedule(m, trace.topology);
        v.require(locality_cost(m, greedy) == locality_cost(m, best), "cost differs from optimal" + at);
      }
      const RunResult r = run(trace, PolicyKind::near_linear, round_robin_schedule(trace.topology),
                              0, {.mode = ScoringMode::clairvoyant});
      const double tolerance = static_cast<double>(k) / static_cast<double>(spec.accesses_per_thread);
      v.require(std::abs(r.remote_fraction() - eps) < tolerance,
                "remote_fraction " + std::to_string(r.remote_fraction()) + at);
    }
  }
  return v;
}

Verdict beats_baselines() {
  Verdict v;
  double greedy = 0, random = 0, robin = 0, gap = 0;
  constexpr int kSeeds = 100;
  for (int seed = 0; seed < kSeeds; ++seed) {
    WorkloadSpec spec;
    spec.sockets = 4;
    spec.cores_per_socket = 4;
    spec.threads = 16;
    spec.quanta = 50;
    spec.locality = 0.2;
    spec.accesses_per_thread = 1000;
    spec.phase_period = 5;
    spec.noise = 0.5;
    spec.seed = static_cast<std::uint64_t>(seed);
    const Trace trace = generate(spec);
    const auto results =
        compare(trace,
                {PolicyKind::near_linear, PolicyKind::random, PolicyKind::round_robin,
                 PolicyKind::optimal_assignment},
                round_robin_schedule(trace.topology), static_cast<std::uint64_t>(seed));
    greedy += results[0].remote_fraction();
    random += results[1].remote_fraction();
    robin += results[2].remote_fraction();
    gap += static_cast<double>(results[0].totals.remote) -
           static_cast<double>(results[3].totals.remote);
  }
  greedy /= kSeeds;
  random /= kSeeds;
  robin /= kSeeds;
  gap /= kSeeds;
  std::printf("      mean remote_fraction: near_linear %.4f, random %.4f, round_robin %.4f\n",
              greedy, random, robin);
  std::printf("      mean remote gap near_linear - optimal_assignment: %.2f accesses per run\n", gap);
  v.require(greedy < random, "near_linear not below random");
  v.require(greedy < robin, "near_linear not below round_robin");
  return v;
}

double time_near_linear(const AccessMatrix& m, const Topology& topo) {
  const auto start = Clock::now();
  const auto result = near_linear_schedule(m, topo);
  const auto stop = Clock::now();
  if (result.first.threads() != m.threads()) std::abort();
  return std::chrono::duration<double>(stop - start).count();
}

Verdict scaling() {
  Verdict v;
  std::mt19937_64 rng(8);
  auto median_time = [&](std::size_t n) {
    const Topology topo(4, n / 4);
    const AccessMatrix m = nt::random_matrix(rng, n, 4, 1'000'000);
    std::vector<double> times;
    for (int i = 0; i < 5; ++i) times.push_back(time_near_linear(m, topo));
    std::sort(times.begin(), times.end());
    return times[2];
  };
  const double one = median_time(1'000'000);
  const double two = median_time(2'000'000);
  std::printf("      median near_linear time: N=1e6 %.3f s, N=2e6 %.3f s, ratio %.2f\n", one, two,
              two / one);
  v.require(two < 3.0 * one, "ratio " + std::to_string(two / one) + " >= 3");
  return v;
}

std::uint64_t fnv1a(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char ch;
  while (in.get(ch)) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

int sh(const std::string& args) {
  const std::string cmd = std::string(NUMASCHED_CLI_PATH) + " " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict cli_determinism() {
  Verdict v;
  const fs::path dir = fs::temp_directory_path() / "numasched_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto at = [&](const char* name) { return (dir / name).string(); };
  const std::string gen =
      "gen --threads 16 --sockets 4 --cores-per-socket 4 --quanta 50 --locality 0.2 "
      "--phase-period 5 --noise 0.5 --seed 7 -o ";
  v.require(sh(gen + at("t1.csv")) == 0 && sh(gen + at("t2.csv")) == 0, "gen failed");
  v.require(fnv1a(at("t1.csv")) == fnv1a(at("t2.csv")), "trace hashes differ");

  const std::string runs = "run --trace " + at("t1.csv") + " --policy near_linear --seed 1";
  v.require(sh(runs + " -o " + at("r1.csv")) == 0 && sh(runs + " -o " + at("r2.csv")) == 0 &&
                sh(runs + " --parallel -o " + at("r3.csv")) == 0,
            "run failed");
  v.require(fnv1a(at("r1.csv")) == fnv1a(at("r2.csv")), "run hashes differ");
  v.require(fnv1a(at("r1.csv")) == fnv1a(at("r3.csv")), "concurrent run hash differs");

  const std::string cmp = "compare --trace " + at("t1.csv") +
                          " --policies near_linear,random,round_robin,optimal_assignment --seed 3";
  v.require(sh(cmp + " -o " + at("c1.csv")) == 0 && sh(cmp + " --parallel -o " + at("c2.csv")) == 0,
            "compare failed");
  v.require(fnv1a(at("c1.csv")) == fnv1a(at("c2.csv")), "compare hashes differ");
  fs::remove_all(dir);
  return v;
}

Verdict trace_round_trip() {
  Verdict v;
  int index = 0;
  for (std::size_t k : {1u, 2u, 3u, 4u, 8u}) {
    for (double eps : {0.0, 0.1, 0.35, 0.6, 0.95}) {
      for (std::size_t phase : {0u, 3u}) {
        WorkloadSpec spec;
        spec.sockets = k;
        spec.cores_per_socket = 1 + index % 4;
        spec.threads = spec.sockets * spec.cores_per_socket;
        spec.quanta = 1 + index % 7;
        spec.locality = eps;
        spec.accesses_per_thread = 1 + static_cast<Count>(index) * 7919;
        spec.phase_period = phase;
        spec.noise = (index % 5) / 4.0;
        spec.seed = 1000 + static_cast<std::uint64_t>(index);
        const Trace trace = generate(spec);
        v.require(trace_from_string(trace_to_string(trace)) == trace,
                  "round trip mismatch for trace " + std::to_string(index));
        ++index;
      }
    }
  }
  v.require(index == 50, "expected 50 traces, generated " + std::to_string(index));
  return v;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "selection oracle equivalence", 10, selection_oracle},
      {2, "schedule validity across policies", 30, schedule_validity},
      {3, "optimal vs brute force on tiny instances", 10, tiny_optimality},
      {4, "best case: no recomputation", 0, best_case},
      {5, "worst case: recomputations reach and never exceed K-2", 0, worst_case},
      {6, "dominant-home recovery", 0, dominant_home},
      {7, "near_linear below random and round_robin", 120, beats_baselines},
      {8, "near-linear scaling in N", 120, scaling},
      {9, "end-to-end CLI determinism", 0, cli_determinism},
      {10, "trace round trip", 0, trace_round_trip},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = Clock::now();
    Verdict verdict;
    try {
      verdict = c.body();
    } catch (const std::exception& e) {
      verdict.pass = false;
      verdict.detail = std::string("exception: ") + e.what();
    }
    const double elapsed = std::chrono::duration<double>(Clock::now() - start).count();
    if (c.time_limit_s > 0 && elapsed >= c.time_limit_s) {
      verdict.require(false, "took " + std::to_string(elapsed) + " s");
    }
    std::printf("[%s] %2d %s (%.2f s)%s%s\n", verdict.pass ? "PASS" : "FAIL", c.id, c.name, elapsed,
                verdict.pass ? "" : ": ", verdict.detail.c_str());
    std::fflush(stdout);
    failures += verdict.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
