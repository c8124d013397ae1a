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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "obsh/metrics.hpp"
#include "obsh/shuffle.hpp"

namespace obsh {

/// Ids of the touched blocks, kept sorted and unique. Their Source positions
/// follow from pi.
class TouchedSet {
public:
    TouchedSet() = default;
    /// Throws std::invalid_argument on duplicates, kDummyId or ids above n.
    TouchedSet(std::vector<BlockId> ids, std::size_t n);

    std::span<const BlockId> ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    bool contains(BlockId id) const;

    /// Uniformly random subset of [1, n] of size k.
    static TouchedSet random(std::size_t n, std::size_t k, RandomSource& rng);

private:
    std::vector<BlockId> ids_;
};

struct BasicOptions {
    /// Dest indices handled per roundtrip pair; client memory grows to
    /// K + batch.
    std::size_t batch = 1;
    /// Blocks the client already holds (the touched set); phase 1 is then
    /// skipped. Must be exactly the touched blocks.
    std::span<const Block> preloaded;
    /// Test-only mutation: never downloads a random block when the needed
    /// one is already held. Not oblivious.
    bool broken = false;
};

/// KCacheShuffleBasic: client memory K + batch, bandwidth exactly 2N
/// (2N - K with preloaded blocks).
Metrics k_cache_shuffle_basic(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                              const TouchedSet& touched, const BasicOptions& options = {});

enum class InnerShuffle { kRecursive, kRoot };

struct KShuffleConfig {
    std::size_t client_blocks = 0; // S
    double epsilon = 0.25;
    double delta = 0.0;
    double log_gate = 0.0;
    InnerShuffle inner = InnerShuffle::kRecursive;
};

enum class KPath {
    kThreePhase,
    /// K = 0: KCacheShuffleBasic.
    kBasic,
    /// K > N/2: full oblivious shuffle.
    kFullShuffle,
};

struct KShuffleReport {
    Metrics metrics;
    KPath path = KPath::kThreePhase;
    std::size_t buckets = 0;      // q
    std::size_t fanout = 0;       // phase-1 spray fan-out per level
    std::size_t levels = 0;       // phase-1 spray levels
    std::size_t quota_base = 0;   // floor((1 - eps) K / q)
    std::size_t rem_capacity = 0; // ceil(2 eps K / q)
    /// 0-based index of the first bucket left to phase 3 (== buckets when
    /// phase 2 handled everything).
    std::size_t first_unprocessed = 0;
    /// Ciphertexts handed to phase 3: rem arrays, remaining touched buckets
    /// and untouched blocks never downloaded in phase 2.
    std::size_t phase3_input = 0;
    std::size_t phase3_from_source = 0;
    std::size_t phase3_dest = 0;
    /// Bucket of every Dest index.
    std::vector<std::uint32_t> dest_bucket;
    /// |touchInd_j| per bucket.
    std::vector<std::size_t> touched_per_bucket;
    std::uint64_t phase1_bandwidth = 0;
    std::uint64_t phase2_bandwidth = 0;
    std::uint64_t phase3_bandwidth = 0;
    /// Transcript event range [begin, end) of phase 2 (memory transcripts).
    std::size_t phase2_begin = 0;
    std::size_t phase2_end = 0;
};

const char* to_string(KPath path);

/// KCacheShuffle with client memory O(S).
KShuffleReport k_cache_shuffle(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                               const TouchedSet& touched, const KShuffleConfig& cfg);

/// KCacheShuffleRoot: S = ceil(sqrt K), square-root inner shuffle.
KShuffleReport k_cache_shuffle_root(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi,
                                    const PermutationMap& sigma, const TouchedSet& touched, double epsilon = 0.25);

} // namespace obsh
