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

#include <concepts>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "obsh/crypto.hpp"
#include "obsh/random.hpp"

namespace obsh {

/// What the shuffles need from a permutation: slot of a real block, and block
/// (or dummy) stored at a slot. A small-domain PRP could model this without
/// materialising the table.
template <class P>
concept PermutationLike = requires(const P& p, BlockId id, std::size_t slot) {
    { p.size() } -> std::convertible_to<std::size_t>;
    { p.real_count() } -> std::convertible_to<std::size_t>;
    { p.slot_of(id) } -> std::convertible_to<std::size_t>;
    { p.id_at(slot) } -> std::convertible_to<BlockId>;
};

/// Explicit table mapping M slots (0-based) to block ids 1..N, with the
/// remaining M - N slots holding kDummyId.
class PermutationMap {
public:
    PermutationMap() = default;

    /// Throws std::invalid_argument unless each id in [1, n] appears exactly
    /// once and every other entry is kDummyId.
    explicit PermutationMap(std::vector<BlockId> table);

    std::size_t size() const { return table_.size(); }
    std::size_t real_count() const { return slot_of_.size(); }

    /// Slot holding block id (1-based id).
    std::size_t slot_of(BlockId id) const { return slot_of_[id - 1]; }
    BlockId id_at(std::size_t slot) const { return table_[slot]; }

    std::span<const BlockId> table() const { return table_; }

    static PermutationMap identity(std::size_t n);

    bool operator==(const PermutationMap& other) const { return table_ == other.table_; }

private:
    std::vector<BlockId> table_;
    std::vector<std::size_t> slot_of_;
};

static_assert(PermutationLike<PermutationMap>);

/// Uniform over all placements of ids 1..n and m - n dummies into m slots.
PermutationMap random_permutation(std::size_t m, std::size_t n, RandomSource& rng);

/// Keeps the fixed id -> slot assignments of `partial` and places the other
/// ids and dummies uniformly over the free slots.
PermutationMap complete_permutation(const std::map<BlockId, std::size_t>& partial, std::size_t m, std::size_t n,
                                    RandomSource& rng);

} // namespace obsh
