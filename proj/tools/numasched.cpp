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

// numasched: generate access-count traces and evaluate placement policies.
//
//   numasched gen --threads 16 --sockets 4 --cores-per-socket 4 --quanta 50
//                 --locality 0.2 --seed 7 -o trace.csv
//   numasched run --trace trace.csv --policy near_linear --seed 1 -o run.csv
//   numasched compare --trace trace.csv --policies near_linear,random,optimal_assignment
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "numasched/numasched.hpp"

namespace {

using namespace numasched;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Writes to a sibling temporary file and renames it over `path`, so readers
// never observe a partial file.
void write_atomically(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    std::cout.flush();
    return;
  }
  const std::filesystem::path target(path);
  std::filesystem::path temp = target;
  temp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + temp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(temp, ignored);
      throw std::runtime_error("failed writing " + temp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(temp, target, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(temp, ignored);
    throw std::runtime_error("cannot rename onto " + path + ": " + ec.message());
  }
}

Trace load_trace(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace " + path);
  try {
    return read_trace(in);
  } catch (const TraceError& e) {
    throw std::runtime_error(path + ":" + e.what());
  }
}

PolicyKind policy_or_usage(const std::string& name) {
  if (auto kind = parse_policy(name)) return *kind;
  throw UsageError("unknown policy '" + name + "'; valid policies: " + policy_names());
}

ScoringMode mode_or_usage(const std::string& name) {
  if (auto mode = parse_scoring_mode(name)) return *mode;
  throw UsageError("unknown scoring mode '" + name + "'; expected reactive or clairvoyant");
}

struct GenArgs {
  WorkloadSpec spec;
  std::string output;
};

struct EvalArgs {
  std::string trace;
  std::string output;
  std::string policy;
  std::vector<std::string> policies{"near_linear", "static_hold", "round_robin", "random",
                                    "optimal_assignment"};
  std::string mode = "reactive";
  std::uint64_t seed = 0;
  bool concurrent = false;
};

int cmd_gen(const GenArgs& args) {
  try {
    validate(args.spec);
  } catch (const WorkloadError& e) {
    throw UsageError(e.what());
  }
  write_atomically(args.output, trace_to_string(generate(args.spec)));
  return 0;
}

RunOptions run_options(const EvalArgs& args) {
  RunOptions options;
  options.mode = mode_or_usage(args.mode);
  options.near_linear.concurrent_candidates = args.concurrent;
  return options;
}

int cmd_run(const EvalArgs& args) {
  const PolicyKind policy = policy_or_usage(args.policy);
  const RunOptions options = run_options(args);
  const Trace trace = load_trace(args.trace);
  const RunResult result =
      run(trace, policy, round_robin_schedule(trace.topology), args.seed, options);
  std::ostringstream out;
  write_run_result(result, out);
  write_atomically(args.output, out.str());
  return 0;
}

int cmd_compare(const EvalArgs& args) {
  std::vector<PolicyKind> policies;
  for (const auto& name : args.policies) policies.push_back(policy_or_usage(name));
  if (policies.empty()) throw UsageError("compare needs at least one policy");
  const RunOptions options = run_options(args);
  const Trace trace = load_trace(args.trace);
  const auto results = compare(trace, policies, round_robin_schedule(trace.topology), args.seed,
                               options, args.concurrent);
  std::ostringstream out;
  write_comparison(results, out);
  write_atomically(args.output, out.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NUMA-aware thread placement: trace generation and policy evaluation"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic access-count trace");
  gen_cmd->add_option("--threads", gen.spec.threads, "Thread count (must equal sockets * cores)")
      ->capture_default_str();
  gen_cmd->add_option("--sockets", gen.spec.sockets, "Socket count")->capture_default_str();
  gen_cmd->add_option("--cores-per-socket", gen.spec.cores_per_socket, "Cores per socket")
      ->capture_default_str();
  gen_cmd->add_option("--quanta", gen.spec.quanta, "Number of scheduling quanta")
      ->capture_default_str();
  gen_cmd->add_option("--locality", gen.spec.locality,
                      "Fraction of accesses spread over non-home sockets, in [0, 1)")
      ->capture_default_str();
  gen_cmd->add_option("--accesses-per-thread", gen.spec.accesses_per_thread,
                      "Accesses per thread per quantum")
      ->capture_default_str();
  gen_cmd->add_option("--phase-period", gen.spec.phase_period,
                      "Rotate home sockets every P quanta (0 disables)")
      ->capture_default_str();
  gen_cmd->add_option("--noise", gen.spec.noise, "Jitter of the remote split, in [0, 1]")
      ->capture_default_str();
  gen_cmd->add_option("--seed", gen.spec.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("-o,--output", gen.output, "Output file (stdout when omitted)");

  EvalArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run one policy over a trace");
  run_cmd->add_option("--trace", run_args.trace, "Trace file")->required();
  run_cmd->add_option("--policy", run_args.policy, "Policy: " + policy_names())->required();
  run_cmd->add_option("--seed", run_args.seed, "Random seed")->capture_default_str();
  run_cmd->add_option("--mode", run_args.mode, "Scoring mode: reactive or clairvoyant")
      ->capture_default_str();
  run_cmd->add_flag("--parallel", run_args.concurrent,
                    "Compute near_linear candidate sets concurrently");
  run_cmd->add_option("-o,--output", run_args.output, "Output file (stdout when omitted)");

  EvalArgs cmp_args;
  auto* cmp_cmd = app.add_subcommand("compare", "Run several policies over one trace");
  cmp_cmd->add_option("--trace", cmp_args.trace, "Trace file")->required();
  cmp_cmd->add_option("--policies", cmp_args.policies, "Comma-separated policies: " + policy_names())
      ->delimiter(',')
      ->capture_default_str();
  cmp_cmd->add_option("--seed", cmp_args.seed, "Random seed")->capture_default_str();
  cmp_cmd->add_option("--mode", cmp_args.mode, "Scoring mode: reactive or clairvoyant")
      ->capture_default_str();
  cmp_cmd->add_flag("--parallel", cmp_args.concurrent,
                    "Run policies and near_linear candidate sets concurrently");
  cmp_cmd->add_option("-o,--output", cmp_args.output, "Output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (*gen_cmd) return cmd_gen(gen);
    if (*run_cmd) return cmd_run(run_args);
    return cmd_compare(cmp_args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
}
