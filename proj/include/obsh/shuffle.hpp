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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obsh/crypto.hpp"
#include "obsh/permutation.hpp"
#include "obsh/random.hpp"
#include "obsh/storage.hpp"

namespace obsh {

/// Everything a shuffle needs besides its permutations. `rng` drives the
/// algorithm's own choices and is only ever asked for below(); `nonce_rng`
/// feeds encryption.
struct ShuffleEnv {
    ServerStore& store;
    const Cipher& cipher;
    RandomSource& rng;
    RandomSource& nonce_rng;
};

struct SlotRef {
    ArrayId array;
    std::uint64_t slot;

    bool operator==(const SlotRef&) const = default;
};

/// Source and destination arrays of one shuffle.
struct ShuffleIo {
    ArrayId source;
    ArrayId dest;
};

/// Cache bound multiplier (1 + 1/eps) * ln(2e).
inline double default_delta(double epsilon) { return (1.0 + 1.0 / epsilon) * std::log(2.0 * std::exp(1.0)); }

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

/// ceil(sqrt(n)) computed exactly.
std::size_t ceil_sqrt(std::size_t n);

/// ceil(x) for a non-negative real, guarded against representation noise
/// (1.25 * 64 must give 80, not 81).
std::size_t ceil_real(double x);
/// floor(x), same guard.
std::size_t floor_real(double x);

/// Deterministic payload of block id, so a test can verify contents without
/// keeping the plaintexts around.
std::vector<std::uint8_t> payload_for(BlockId id, std::size_t block_size);

/// Fixed-capacity store of client-held plaintext blocks addressed by handle.
class BlockSlab {
public:
    using Handle = std::uint32_t;

    explicit BlockSlab(std::size_t block_size) : block_size_(block_size) {}

    Handle alloc()
    {
        if (!free_.empty()) {
            const Handle h = free_.back();
            free_.pop_back();
            return h;
        }
        ids_.push_back(kDummyId);
        bytes_.resize(bytes_.size() + block_size_);
        return static_cast<Handle>(ids_.size() - 1);
    }
    void release(Handle h) { free_.push_back(h); }

    BlockId& id(Handle h) { return ids_[h]; }
    BlockId id(Handle h) const { return ids_[h]; }
    std::span<std::uint8_t> payload(Handle h) { return std::span(bytes_).subspan(h * block_size_, block_size_); }
    std::span<const std::uint8_t> payload(Handle h) const
    {
        return std::span(bytes_).subspan(h * block_size_, block_size_);
    }
    std::size_t live() const { return ids_.size() - free_.size(); }

private:
    std::size_t block_size_;
    std::vector<BlockId> ids_;
    std::vector<std::uint8_t> bytes_;
    std::vector<Handle> free_;
};

/// Client-side helpers wrapping the counted moves.
class ClientOps {
public:
    ClientOps(ShuffleEnv env);

    ShuffleEnv& env() { return env_; }
    BlockSlab& slab() { return slab_; }

    /// Downloads and decrypts. Dummies are discarded immediately and
    /// std::nullopt returned.
    std::optional<BlockSlab::Handle> fetch(SlotRef from);
    /// Re-encrypts a held block, uploads it and frees the handle.
    void put(BlockSlab::Handle h, SlotRef to);
    /// Uploads a fresh encryption of the dummy block.
    void put_dummy(SlotRef to);
    /// Takes a plaintext block into client memory without a download.
    BlockSlab::Handle adopt(BlockId id, std::span<const std::uint8_t> payload);

private:
    ShuffleEnv env_;
    BlockSlab slab_;
    std::vector<std::uint8_t> buf_;
};

/// A server prepared for one shuffle: Source holds encryptions of blocks
/// 1..N (or N reals plus dummies) placed by pi, Dest is empty.
struct ShuffleSetup {
    ServerStore store;
    ShuffleIo io;
};

struct SetupOptions {
    std::size_t capacity_factor = 6;
    TranscriptMode transcript = TranscriptMode::kMemory;
    /// Dest as a lane array for the polynomial shuffle.
    bool lane_dest = false;
};

/// Builds Source (uncounted) under pi with payload_for() contents.
ShuffleSetup make_setup(const PermutationMap& pi, const Cipher& cipher, RandomSource& nonce_rng,
                        const SetupOptions& options = {});

/// Same, with caller-provided payloads for ids 1..N.
ShuffleSetup make_setup(const PermutationMap& pi, const Cipher& cipher, RandomSource& nonce_rng,
                        std::span<const std::vector<std::uint8_t>> payloads, const SetupOptions& options = {});

/// Correctness oracle: every real block l sits at Dest[sigma(l)] with the
/// expected payload. Returns the number of mismatches.
std::size_t count_misplaced(const ServerStore& store, ArrayId dest, const PermutationMap& sigma, const Cipher& cipher);

/// Like count_misplaced, for a lane-encoded Dest.
std::size_t count_misplaced_lanes(const ServerStore& store, ArrayId dest, const PermutationMap& sigma,
                                  const Cipher& cipher);

} // namespace obsh
