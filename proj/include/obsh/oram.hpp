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
#include <map>
#include <vector>

#include "obsh/crypto.hpp"
#include "obsh/kshuffle.hpp"
#include "obsh/metrics.hpp"
#include "obsh/permutation.hpp"
#include "obsh/random.hpp"
#include "obsh/storage.hpp"

namespace obsh {

struct OramOptions {
    CipherMode cipher_mode = CipherMode::kAesGcm;
    TranscriptMode transcript = TranscriptMode::kMemory;
};

/// Read-only square-root ORAM over N blocks, rebuilt with
/// k_cache_shuffle_basic every ceil(sqrt N) queries.
class SquareRootOram {
public:
    /// payloads[i] is block i+1; all of the same size. Setup is uncounted.
    SquareRootOram(const std::vector<std::vector<std::uint8_t>>& payloads, const Key& key, std::uint64_t seed,
                   const OramOptions& options = {});

    SquareRootOram(const SquareRootOram&) = delete;
    SquareRootOram& operator=(const SquareRootOram&) = delete;

    /// Returns block q, downloading exactly one block. Rebuilds when the
    /// epoch is full. Throws std::out_of_range unless 1 <= q <= N.
    Block query(BlockId q);

    /// Reshuffles under a fresh permutation. Throws InvalidState unless the
    /// epoch is full; query() calls it automatically.
    void rebuild();

    std::size_t size() const { return n_; }
    std::size_t epoch_length() const { return epoch_; }
    std::size_t query_count() const { return stash_.size(); }
    std::size_t stash_size() const { return stash_.size(); }
    std::uint64_t epochs_completed() const { return epochs_; }
    const PermutationMap& position_map() const { return pos_; }
    /// Ids held in the stash, ascending.
    std::vector<BlockId> stash_ids() const;

    const Metrics& totals() const { return store_.metrics(); }
    std::uint64_t last_rebuild_bandwidth() const { return last_rebuild_bandwidth_; }

    const ServerStore& store() const { return store_; }
    ArrayId source_array() const { return source_; }

private:
    BlockId fetch_position(std::uint64_t pos);

    std::size_t n_;
    std::size_t epoch_;
    Cipher cipher_;
    SeededRng rng_;
    SeededRng nonce_rng_;
    ServerStore store_;
    ArrayId source_;
    PermutationMap pos_;
    std::map<BlockId, std::vector<std::uint8_t>> stash_;
    IndexPool untouched_;
    std::uint64_t epochs_ = 0;
    std::uint64_t last_rebuild_bandwidth_ = 0;
    std::vector<std::uint8_t> payload_buf_;
};

} // namespace obsh
