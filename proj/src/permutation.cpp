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

#include "obsh/permutation.hpp"

#include <stdexcept>
#include <string>

namespace obsh {

PermutationMap::PermutationMap(std::vector<BlockId> table) : table_(std::move(table))
{
    std::size_t reals = 0;
    for (auto id : table_)
        if (id != kDummyId)
            ++reals;
    constexpr auto kUnset = static_cast<std::size_t>(-1);
    slot_of_.assign(reals, kUnset);
    for (std::size_t slot = 0; slot < table_.size(); ++slot) {
        const BlockId id = table_[slot];
        if (id == kDummyId)
            continue;
        if (id > reals)
            throw std::invalid_argument("permutation table holds id " + std::to_string(id) + " but only " +
                                        std::to_string(reals) + " real entries");
        if (slot_of_[id - 1] != kUnset)
            throw std::invalid_argument("permutation table repeats id " + std::to_string(id));
        slot_of_[id - 1] = slot;
    }
}

PermutationMap PermutationMap::identity(std::size_t n)
{
    std::vector<BlockId> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = i + 1;
    return PermutationMap(std::move(t));
}

PermutationMap random_permutation(std::size_t m, std::size_t n, RandomSource& rng)
{
    if (n > m)
        throw std::invalid_argument("random_permutation: more real ids than slots");
    std::vector<BlockId> t(m, kDummyId);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = i + 1;
    shuffle_in_place(std::span<BlockId>(t), rng);
    return PermutationMap(std::move(t));
}

PermutationMap complete_permutation(const std::map<BlockId, std::size_t>& partial, std::size_t m, std::size_t n,
                                    RandomSource& rng)
{
    if (n > m)
        throw std::invalid_argument("complete_permutation: more real ids than slots");
    std::vector<BlockId> t(m, kDummyId);
    std::vector<bool> taken(m, false);
    for (const auto& [id, slot] : partial) {
        if (id == kDummyId || id > n)
            throw std::invalid_argument("complete_permutation: id " + std::to_string(id) + " out of range");
        if (slot >= m)
            throw std::invalid_argument("complete_permutation: slot " + std::to_string(slot) + " out of range");
        if (taken[slot])
            throw std::invalid_argument("complete_permutation: slot " + std::to_string(slot) + " assigned twice");
        taken[slot] = true;
        t[slot] = id;
    }
    std::vector<std::size_t> free_slots;
    free_slots.reserve(m - partial.size());
    for (std::size_t s = 0; s < m; ++s)
        if (!taken[s])
            free_slots.push_back(s);
    std::vector<BlockId> rest;
    rest.reserve(free_slots.size());
    for (BlockId id = 1; id <= n; ++id)
        if (!partial.contains(id))
            rest.push_back(id);
    rest.resize(free_slots.size(), kDummyId);
    shuffle_in_place(std::span<BlockId>(rest), rng);
    for (std::size_t i = 0; i < free_slots.size(); ++i)
        t[free_slots[i]] = rest[i];
    return PermutationMap(std::move(t));
}

} // namespace obsh
