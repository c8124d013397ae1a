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
#include <random>
#include <span>
#include <vector>

namespace obsh {

/// Source of client-side randomness. Every random decision an algorithm makes
/// goes through below(), so a test can substitute an enumerating source and
/// walk all branches exactly.
class RandomSource {
public:
    virtual ~RandomSource() = default;

    /// Raw 64 random bits.
    virtual std::uint64_t next() = 0;

    /// Uniform integer in [0, n). n must be positive.
    virtual std::uint64_t below(std::uint64_t n) = 0;
};

/// Deterministic generator seeded from a 64-bit value.
class SeededRng final : public RandomSource {
public:
    explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() override { return engine_(); }

    std::uint64_t below(std::uint64_t n) override
    {
        // Lemire's multiply-shift with rejection; exact and portable.
        std::uint64_t x = engine_();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = engine_();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    std::mt19937_64 engine_;
};

/// Derives an independent stream seed from a base seed and a stream tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    // splitmix64 finalizer over the combined value
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

template <class T>
void shuffle_in_place(std::span<T> items, RandomSource& rng)
{
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(items[i - 1], items[j]);
    }
}

/// Set of indices supporting O(1) insert, erase and uniform sampling.
/// Iteration order is an implementation detail; sampling goes through the
/// caller's RandomSource only.
class IndexPool {
public:
    IndexPool() = default;

    /// Pool over [0, universe) containing the given members.
    IndexPool(std::size_t universe, std::span<const std::size_t> members)
        : where_(universe, kAbsent)
    {
        items_.reserve(members.size());
        for (auto m : members)
            insert(m);
    }

    static IndexPool full(std::size_t universe)
    {
        IndexPool p;
        p.where_.resize(universe);
        p.items_.resize(universe);
        for (std::size_t i = 0; i < universe; ++i) {
            p.items_[i] = i;
            p.where_[i] = i;
        }
        return p;
    }

    bool contains(std::size_t v) const { return v < where_.size() && where_[v] != kAbsent; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }

    void insert(std::size_t v)
    {
        if (contains(v))
            return;
        where_[v] = items_.size();
        items_.push_back(v);
    }

    void erase(std::size_t v)
    {
        if (!contains(v))
            return;
        const std::size_t at = where_[v];
        const std::size_t last = items_.back();
        items_[at] = last;
        where_[last] = at;
        items_.pop_back();
        where_[v] = kAbsent;
    }

    /// Removes and returns a uniformly chosen member. Pool must be non-empty.
    std::size_t take_random(RandomSource& rng)
    {
        const std::size_t v = items_[rng.below(items_.size())];
        erase(v);
        return v;
    }

    std::span<const std::size_t> members() const { return items_; }

private:
    static constexpr std::size_t kAbsent = static_cast<std::size_t>(-1);
    std::vector<std::size_t> items_;
    std::vector<std::size_t> where_;
};

} // namespace obsh
