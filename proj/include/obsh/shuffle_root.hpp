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

#include <cstdint>
#include <vector>

#include "obsh/metrics.hpp"
#include "obsh/shuffle.hpp"

namespace obsh {

struct RootConfig {
    double epsilon = 0.5;
    /// Cache cap multiplier; 0 selects default_delta(epsilon).
    double delta = 0.0;

    double effective_delta() const { return delta > 0.0 ? delta : default_delta(epsilon); }
};

/// Optional detail of a CacheShuffleRoot run.
struct RootTrace {
    std::size_t rounds = 0;
    std::size_t buckets = 0;
    /// Total queued blocks after each spray round.
    std::vector<std::uint64_t> round_totals;
};

/// Exact bandwidth of a non-aborting run: N + 2 * s * q + N.
std::uint64_t root_bandwidth(std::size_t n, double epsilon);

/// CacheShuffleRoot. Source must hold block l at pi(l); on return Dest holds
/// block l at sigma(l). Throws ShuffleAborted on cache overflow and
/// std::invalid_argument on bad parameters.
Metrics cache_shuffle_root(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                           const RootConfig& cfg = {}, RootTrace* trace = nullptr);

} // namespace obsh
