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

// Building blocks shared by the spray-based shuffles. Not a stable API.

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "obsh/shuffle.hpp"

namespace obsh::detail {

inline constexpr std::uint32_t kNoEntry = std::numeric_limits<std::uint32_t>::max();

/// Per-execution client state shared by nested spray calls.
struct Workspace {
    Workspace(ShuffleEnv env, ArrayId dest, std::function<std::uint64_t(BlockId)> dest_of);
    /// For calls that never write Dest themselves; dest_slots sizes the
    /// scratch tables.
    Workspace(ShuffleEnv env, std::size_t dest_slots, std::function<std::uint64_t(BlockId)> dest_of);

    ClientOps ops;
    ArrayId dest;
    /// Dest index of a real block (sigma).
    std::function<std::uint64_t(BlockId)> dest_of;
    /// Scratch indexed by Dest slot. Nested calls work on disjoint dest sets
    /// one after another, so one table serves all of them.
    std::vector<std::uint32_t> bucket_of_dest;
    std::vector<std::uint32_t> handle_of_dest;
    std::size_t arrays_created = 0;

    ServerStore& store() { return ops.env().store; }
    RandomSource& rng() { return ops.env().rng; }
    std::string next_name(const char* prefix);
    [[noreturn]] void abort(const std::string& reason);
};

enum class Grouping {
    /// Round i takes input[i*g, (i+1)*g).
    kContiguous,
    /// Every input slot joins a uniformly chosen round.
    kRandom,
};

struct SprayParams {
    std::size_t rounds = 0;
    std::size_t buckets = 0;
    Grouping grouping = Grouping::kContiguous;
    double cache_cap = std::numeric_limits<double>::infinity();
    const char* name = "T";
};

struct SprayOutput {
    /// buckets arrays of exactly `rounds` slots each.
    std::vector<ArrayId> temps;
    /// Blocks still on the client, per bucket.
    std::vector<std::deque<BlockSlab::Handle>> queues;
    /// Sum of queue sizes after every round.
    std::vector<std::uint64_t> round_totals;
};

/// Spray phase: after each round every bucket receives exactly one upload.
/// bucket_of maps a real block to its bucket. Aborts when the queues hold
/// more than cache_cap blocks after a round.
SprayOutput spray(Workspace& ws, std::span<const SlotRef> input, const SprayParams& params,
                  const std::function<std::size_t(BlockId)>& bucket_of);

/// Folds every queue into the dummy slots of its temp array by a full
/// download/upload pass. Aborts when a queue does not fit.
void adjust(Workspace& ws, SprayOutput& out);

/// Shape of the square-root shuffle over n input slots.
struct RootShape {
    std::size_t rounds;  // s = ceil(sqrt n)
    std::size_t group;   // ceil(n / s)
    std::size_t buckets; // q = ceil((1 + eps/2) sqrt n)
};
RootShape root_shape(std::size_t n, double epsilon);

struct RootRun {
    RootShape shape;
    std::vector<std::uint64_t> round_totals;
};

/// Square-root shuffle of the blocks in `input` into Dest[dest_set]
/// (dest_set ascending). Input dummies are dropped.
RootRun root_into(Workspace& ws, std::span<const SlotRef> input, std::span<const std::uint64_t> dest_set,
                  double epsilon, double delta);

/// Splits dest_set into `buckets` uniformly random parts, recording each
/// index's part in ws.bucket_of_dest. Parts keep ascending order.
std::vector<std::vector<std::uint64_t>> random_partition(Workspace& ws, std::span<const std::uint64_t> dest_set,
                                                         std::size_t buckets);

/// All slots of an array as input references.
std::vector<SlotRef> whole_array(ArrayId array, std::size_t slots);

} // namespace obsh::detail
