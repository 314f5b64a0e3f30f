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

// Synthetic access-count traces and their on-disk text format.
//
// A trace file looks like
//
//   # sockets=4 cores_per_socket=4 threads=16 quanta=50
//   quantum,thread,socket,count
//   0,0,0,800
//   0,0,1,67
//   ...
//
// Records are sparse (zero counts may be omitted) and grouped by ascending
// quantum. The writer emits a single explicit zero record for a quantum with
// no accesses so that every quantum is present in the file. Traces with fewer
// threads than cores are padded in memory with all-zero threads carrying the
// highest ids.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "numasched/core.hpp"

namespace numasched {

struct WorkloadSpec {
  std::size_t threads = 16;
  std::size_t sockets = 4;
  std::size_t cores_per_socket = 4;
  std::size_t quanta = 1;
  // Fraction of each thread's accesses spread over its non-home sockets.
  double locality = 0.0;
  Count accesses_per_thread = 1000;
  // Every phase_period quanta each home socket rotates by one; 0 disables.
  std::size_t phase_period = 0;
  // Relative jitter of the per-socket weights used to split the remote
  // share, in [0, 1]. Home shares are never jittered.
  double noise = 0.0;
  std::uint64_t seed = 0;
};

class WorkloadError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void validate(const WorkloadSpec& spec) {
  if (spec.sockets == 0 || spec.cores_per_socket == 0) {
    throw WorkloadError("sockets and cores_per_socket must be positive");
  }
  if (spec.threads != spec.sockets * spec.cores_per_socket) {
    throw WorkloadError("threads (" + std::to_string(spec.threads) +
                        ") must equal sockets * cores_per_socket (" +
                        std::to_string(spec.sockets * spec.cores_per_socket) + ")");
  }
  if (spec.quanta == 0) throw WorkloadError("quanta must be at least 1");
  if (!(spec.locality >= 0.0 && spec.locality < 1.0)) {
    throw WorkloadError("locality must lie in [0, 1)");
  }
  if (spec.accesses_per_thread == 0) throw WorkloadError("accesses_per_thread must be positive");
  if (!(spec.noise >= 0.0 && spec.noise <= 1.0)) throw WorkloadError("noise must lie in [0, 1]");
}

struct Trace {
  Topology topology{1, 1};
  // Real threads; matrices carry topology.capacity() rows, the tail being
  // zero-count padding.
  std::size_t threads = 0;
  std::vector<AccessMatrix> matrices;

  std::size_t quanta() const { return matrices.size(); }
  friend bool operator==(const Trace&, const Trace&) = default;
};

inline std::size_t home_socket(std::size_t thread, std::size_t quantum, std::size_t sockets,
                               std::size_t phase_period) {
  const std::size_t shift = phase_period > 0 ? quantum / phase_period : 0;
  return (thread % sockets + shift) % sockets;
}

namespace detail {

inline double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Splits `total` into integer parts proportional to `weights` (Hamilton
// method). Leftover units go to the largest fractional parts; equal
// remainders are ordered by `tie_keys`.
inline std::vector<Count> largest_remainder(Count total, const std::vector<double>& weights,
                                            const std::vector<std::uint64_t>& tie_keys) {
  const double weight_sum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<Count> parts(weights.size(), 0);
  std::vector<double> remainders(weights.size(), 0.0);
  Count assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double ideal = static_cast<double>(total) * weights[i] / weight_sum;
    const double whole = std::floor(ideal);
    parts[i] = static_cast<Count>(whole);
    remainders[i] = ideal - whole;
    assigned += parts[i];
  }
  // Rounding in the ideal shares may push the floors past total.
  while (assigned > total) {
    auto it = std::max_element(parts.begin(), parts.end());
    --*it;
    --assigned;
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
    if (tie_keys[a] != tie_keys[b]) return tie_keys[a] < tie_keys[b];
    return a < b;
  });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % order.size()) {
    ++parts[order[i]];
    ++assigned;
  }
  return parts;
}

}  // namespace detail

inline Trace generate(const WorkloadSpec& spec) {
  validate(spec);
  const Topology topology(spec.sockets, spec.cores_per_socket);
  const std::size_t k = spec.sockets;
  std::mt19937_64 rng(spec.seed);

  // With a single socket there is nowhere remote to send accesses.
  const Count remote_total =
      k == 1 ? 0
             : static_cast<Count>(
                   std::llround(spec.locality * static_cast<double>(spec.accesses_per_thread)));
  const Count home_total = spec.accesses_per_thread - remote_total;

  Trace trace{topology, spec.threads, {}};
  trace.matrices.reserve(spec.quanta);
  std::vector<double> weights(k > 1 ? k - 1 : 0);
  std::vector<std::uint64_t> tie_keys(weights.size());
  for (std::size_t q = 0; q < spec.quanta; ++q) {
    AccessMatrix matrix(spec.threads, k);
    for (std::size_t t = 0; t < spec.threads; ++t) {
      const std::size_t home = home_socket(t, q, k, spec.phase_period);
      matrix.at(t, home) = home_total;
      if (weights.empty()) continue;
      for (std::size_t j = 0; j < weights.size(); ++j) {
        weights[j] = 1.0 + spec.noise * (2.0 * detail::unit_double(rng) - 1.0);
        tie_keys[j] = rng();
      }
      const auto parts = detail::largest_remainder(remote_total, weights, tie_keys);
      for (std::size_t j = 0, s = 0; s < k; ++s) {
        if (s == home) continue;
        matrix.at(t, s) = parts[j++];
      }
    }
    trace.matrices.push_back(std::move(matrix));
  }
  return trace;
}

inline constexpr std::string_view kTraceHeader = "quantum,thread,socket,count";

inline void write_trace(const Trace& trace, std::ostream& out) {
  out << "# sockets=" << trace.topology.sockets()
      << " cores_per_socket=" << trace.topology.cores_per_socket() << " threads=" << trace.threads
      << " quanta=" << trace.quanta() << '\n';
  out << kTraceHeader << '\n';
  for (std::size_t q = 0; q < trace.quanta(); ++q) {
    const AccessMatrix& m = trace.matrices[q];
    bool wrote = false;
    for (std::size_t t = 0; t < trace.threads; ++t) {
      for (std::size_t s = 0; s < m.sockets(); ++s) {
        if (m.at(t, s) == 0) continue;
        out << q << ',' << t << ',' << s << ',' << m.at(t, s) << '\n';
        wrote = true;
      }
    }
    if (!wrote) out << q << ",0,0,0\n";
  }
}

inline std::string trace_to_string(const Trace& trace) {
  std::ostringstream out;
  write_trace(trace, out);
  return out.str();
}

// Parse failure; line() is 1-based, counting every physical line.
class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::optional<std::uint64_t> parse_u64(std::string_view text) {
  std::uint64_t value = 0;
  if (text.empty()) return std::nullopt;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

inline Trace read_trace(std::istream& in) {
  std::map<std::string, std::uint64_t, std::less<>> meta;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;

  std::optional<Trace> trace;
  std::vector<std::uint8_t> seen;
  std::optional<std::size_t> current;  // quantum currently being filled

  auto field = [&](std::string_view text, const char* name) -> std::uint64_t {
    auto v = detail::parse_u64(text);
    if (!v) {
      throw TraceError(line_no, std::string("non-integer ") + name + " '" + std::string(text) + "'");
    }
    return *v;
  };

  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    if (!header_seen) {
      if (line.front() == '#') {
        std::istringstream tokens{std::string(line.substr(1))};
        std::string token;
        while (tokens >> token) {
          const auto eq = token.find('=');
          if (eq == std::string::npos) continue;
          const std::string key = token.substr(0, eq);
          if (key != "sockets" && key != "cores_per_socket" && key != "threads" &&
              key != "quanta") {
            continue;
          }
          const auto value = detail::parse_u64(std::string_view(token).substr(eq + 1));
          if (!value) throw TraceError(line_no, "non-integer metadata value for " + key);
          if (auto it = meta.find(key); it != meta.end() && it->second != *value) {
            throw TraceError(line_no, "conflicting metadata for " + key);
          }
          meta[key] = *value;
        }
        continue;
      }
      if (line != kTraceHeader) {
        throw TraceError(line_no, "expected header '" + std::string(kTraceHeader) + "'");
      }
      for (const char* key : {"sockets", "cores_per_socket", "threads", "quanta"}) {
        if (!meta.contains(key)) {
          throw TraceError(line_no, std::string("missing metadata ") + key);
        }
      }
      Topology topology = [&] {
        try {
          return Topology(meta["sockets"], meta["cores_per_socket"]);
        } catch (const DimensionError& e) {
          throw TraceError(line_no, std::string("inconsistent dimensions: ") + e.what());
        }
      }();
      const std::uint64_t threads = meta["threads"];
      if (threads == 0 || threads > topology.capacity()) {
        throw TraceError(line_no, "inconsistent dimensions: threads=" + std::to_string(threads) +
                                      " must lie in [1, sockets*cores_per_socket=" +
                                      std::to_string(topology.capacity()) + "]");
      }
      if (meta["quanta"] == 0) throw TraceError(line_no, "quanta must be at least 1");
      trace = Trace{topology, static_cast<std::size_t>(threads), {}};
      trace->matrices.reserve(meta["quanta"]);
      seen.assign(threads * topology.sockets(), 0);
      header_seen = true;
      continue;
    }

    if (line.front() == '#') throw TraceError(line_no, "comment after header");
    const auto fields = detail::split(line, ',');
    if (fields.size() != 4) {
      throw TraceError(line_no, "expected 4 fields, found " + std::to_string(fields.size()));
    }
    const std::uint64_t quantum = field(fields[0], "quantum");
    const std::uint64_t thread = field(fields[1], "thread");
    const std::uint64_t socket = field(fields[2], "socket");
    std::string_view count_text = fields[3];
    if (!count_text.empty() && count_text.front() == '-' &&
        detail::parse_u64(count_text.substr(1))) {
      throw TraceError(line_no, "negative count " + std::string(count_text));
    }
    const std::uint64_t count = field(count_text, "count");

    const std::size_t quanta = meta["quanta"];
    if (quantum >= quanta) {
      throw TraceError(line_no, "inconsistent dimensions: quantum " + std::to_string(quantum) +
                                    " out of range for quanta=" + std::to_string(quanta));
    }
    if (thread >= trace->threads) {
      throw TraceError(line_no, "inconsistent dimensions: thread " + std::to_string(thread) +
                                    " out of range for threads=" + std::to_string(trace->threads));
    }
    if (socket >= trace->topology.sockets()) {
      throw TraceError(line_no, "inconsistent dimensions: socket " + std::to_string(socket) +
                                    " out of range for sockets=" +
                                    std::to_string(trace->topology.sockets()));
    }
    if (current && quantum < *current) {
      throw TraceError(line_no, "quantum " + std::to_string(quantum) + " after quantum " +
                                    std::to_string(*current) + ": quanta must ascend");
    }
    if (!current || quantum > *current) {
      const std::size_t expected = current ? *current + 1 : 0;
      if (quantum != expected) {
        throw TraceError(line_no, "missing quantum " + std::to_string(expected));
      }
      trace->matrices.emplace_back(trace->topology.capacity(), trace->topology.sockets());
      std::fill(seen.begin(), seen.end(), 0);
      current = quantum;
    }
    const std::size_t slot = thread * trace->topology.sockets() + socket;
    if (seen[slot]) {
      throw TraceError(line_no, "duplicate record for quantum " + std::to_string(quantum) +
                                    ", thread " + std::to_string(thread) + ", socket " +
                                    std::to_string(socket));
    }
    seen[slot] = 1;
    trace->matrices.back().at(thread, socket) = count;
  }

  if (!header_seen) throw TraceError(line_no + 1, "missing header");
  if (trace->matrices.size() != meta["quanta"]) {
    throw TraceError(line_no + 1, "missing quantum " + std::to_string(trace->matrices.size()) +
                                      " (expected " + std::to_string(meta["quanta"]) +
                                      " quanta)");
  }
  return std::move(*trace);
}

inline Trace trace_from_string(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in);
}

}  // namespace numasched
