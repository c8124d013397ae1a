/*
 * Copyright 2026 The obsh Authors
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

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "obsh/crypto.hpp"
#include "obsh/metrics.hpp"
#include "obsh/permutation.hpp"
#include "obsh/random.hpp"
#include "obsh/storage.hpp"

namespace obsh {

enum class Algo {
    kRoot,
    kRecursive,
    kBasic,
    /// KCacheShuffleBasic without its random downloads; not oblivious.
    kBasicBroken,
    kK,
    kKRoot,
    kDummy,
};

std::optional<Algo> parse_algo(const std::string& name);
const char* algo_name(Algo algo);

struct RunSpec {
    Algo algo = Algo::kRoot;
    std::size_t n = 0;
    std::size_t k = 0;
    std::size_t d = 0;
    std::size_t s = 0;
    std::size_t l = 256;
    double epsilon = 0.5;
    std::uint64_t seed = 1;
    std::size_t batch = 1;
    double delta = 0.0;
    double log_gate = 0.0;
    std::size_t block_size = kDefaultBlockSize;
    CipherMode cipher_mode = CipherMode::kAesGcm;
    TranscriptMode transcript = TranscriptMode::kOff;
    /// Decrypt Dest afterwards and count misplaced blocks.
    bool verify = true;
    /// When set, every move is also written here as text.
    std::ostream* transcript_stream = nullptr;
};

/// Throws std::invalid_argument when the parameters do not fit the
/// algorithm.
void validate(const RunSpec& spec);

/// Per-event fingerprint: kind, array and slot (or a hash of the evaluation
/// point list).
using TranscriptTokens = std::vector<std::uint64_t>;

struct RunResult {
    Metrics metrics;
    bool aborted = false;
    std::string abort_reason;
    std::size_t misplaced = 0;
    double runtime_ms = 0.0;
    /// Algorithm-specific figures (buckets, phase-3 input, ...).
    std::map<std::string, double> extra;

    /// Spray-phase queue peak for spray shuffles, client high water
    /// otherwise.
    double max_cache() const;
    double mean_cache() const;
};

/// Draws pi, sigma and the touched set from the seed, then runs.
RunResult run_once(const RunSpec& spec);

/// Runs on caller-fixed permutations. touched lists block ids.
RunResult execute(const RunSpec& spec, const PermutationMap& pi, const PermutationMap& sigma,
                  std::span<const BlockId> touched, RandomSource& rng, RandomSource& nonce_rng,
                  TranscriptTokens* tokens = nullptr);

/// Worker count: OBSH_THREADS if set and positive, else the hardware
/// concurrency.
std::size_t worker_threads();

/// Calls fn(i) for i in [0, count) on up to `threads` threads.
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn);

struct ExperimentSpec {
    RunSpec base;
    std::vector<double> epsilons;
    std::size_t seeds = 10;
    std::uint64_t first_seed = 1;
};

struct ExperimentRow {
    RunSpec spec;
    RunResult result;
};

/// One row per (epsilon, seed), in that order regardless of threading.
std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec, std::size_t threads = worker_threads());

inline constexpr const char* kCsvHeader =
    "algo,n,k,d,s,l,epsilon,seed,bandwidth,max_cache,mean_cache,roundtrips,aborted,runtime_ms";

void write_csv(std::ostream& out, std::span<const ExperimentRow> rows);

} // namespace obsh
