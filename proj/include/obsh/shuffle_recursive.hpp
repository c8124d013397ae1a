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
#include <functional>
#include <span>
#include <vector>

#include "obsh/metrics.hpp"
#include "obsh/shuffle.hpp"

namespace obsh {

struct RecursiveConfig {
    /// Client budget S; also the RSpray fan-out.
    std::size_t client_blocks = 0;
    double epsilon = 0.5;
    /// Cache cap multiplier; 0 selects default_delta of the slack in use.
    double delta = 0.0;
    /// Require S >= log_gate * ln N. 0 disables the check.
    double log_gate = 0.0;
};

/// Slack kept by every recursive level: d <= (1 - eps') n with
/// eps' = eps / (2 (1 + eps)).
double level_slack(double epsilon);

enum class CallKind { kSpray, kRSpray, kRoot };

/// One step of a recursive execution and its exact block-move cost.
struct CallRecord {
    CallKind kind;
    std::size_t level;
    std::size_t n;       // input slots
    std::size_t d;       // destination indices
    std::size_t rounds;  // temp size (spray kinds) or s (root)
    std::size_t buckets; // q
    std::uint64_t bandwidth;
};

struct RecursiveTrace {
    std::vector<CallRecord> calls;
    std::uint64_t bandwidth() const;
};

struct RSprayResult {
    std::vector<ArrayId> temps;
    std::vector<std::vector<std::uint64_t>> parts;
};

/// RSpray over `input` toward the private destination set dest_set
/// (ascending). dest_of maps a real block to its destination index.
/// Throws std::invalid_argument unless d <= (1 - epsilon) n, and
/// ShuffleAborted when a part does not fit its temp array.
RSprayResult rspray(ShuffleEnv env, std::span<const SlotRef> input, std::span<const std::uint64_t> dest_set,
                    std::size_t dest_slots, const std::function<std::uint64_t(BlockId)>& dest_of,
                    std::size_t client_blocks, double epsilon);

/// CacheShuffle with client memory O(S).
Metrics cache_shuffle(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                      const RecursiveConfig& cfg, RecursiveTrace* trace = nullptr);

namespace detail {
struct Workspace;
/// Recursive shuffle of arbitrary input slots into Dest[dest_set].
void cache_shuffle_into(Workspace& ws, std::span<const SlotRef> input, std::span<const std::uint64_t> dest_set,
                        const RecursiveConfig& cfg, RecursiveTrace* trace);
} // namespace detail

} // namespace obsh
