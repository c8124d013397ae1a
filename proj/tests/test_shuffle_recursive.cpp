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

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "obsh/errors.hpp"
#include "obsh/shuffle_recursive.hpp"
#include "obsh/spray.hpp"
#include "support.hpp"

using namespace obsh;
using obsh::testing::Bench;

namespace {

struct RSprayCase {
    Bench bench;
    std::vector<std::uint64_t> dest_set;

    RSprayCase(std::size_t n, std::size_t d, std::uint64_t seed) : bench(n, d, seed)
    {
        for (std::size_t i = 0; i < d; ++i)
            dest_set.push_back(i);
    }

    RSprayResult run(std::size_t s, double eps)
    {
        const auto input = detail::whole_array(bench.io().source, bench.pi.size());
        return rspray(bench.env(), input, dest_set, dest_set.size(), [](BlockId id) { return id - 1; }, s, eps);
    }
};

} // namespace

TEST_CASE("RSpray over dummies only costs 4n")
{
    RSprayCase c(4, 0, 1);
    const auto out = c.run(2, 0.5);
    CHECK(c.bench.store().metrics().bandwidth_blocks == 16);
    CHECK(out.temps.size() == 2);
    for (const auto& p : out.parts)
        CHECK(p.empty());
}

TEST_CASE("RSpray n = 8, d = 4, S = 2 keeps each block in its part's temp")
{
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        RSprayCase c(8, 4, seed);
        const auto out = c.run(2, 0.5);
        CHECK(c.bench.store().metrics().bandwidth_blocks == 32);
        REQUIRE(out.temps.size() == 2);
        std::size_t found = 0;
        for (std::size_t j = 0; j < 2; ++j) {
            REQUIRE(c.bench.store().array_size(out.temps[j]) == 4);
            std::set<BlockId> ids;
            for (std::size_t i = 0; i < 4; ++i) {
                const Block b = c.bench.cipher.decrypt(c.bench.store().peek(out.temps[j], i));
                if (!b.is_dummy()) {
                    ids.insert(b.id);
                    CHECK(b.payload == payload_for(b.id, kDefaultBlockSize));
                }
            }
            std::set<BlockId> want;
            for (auto d : out.parts[j])
                want.insert(d + 1);
            CHECK(ids == want);
            found += ids.size();
        }
        CHECK(found == 4);
    }
}

TEST_CASE("RSpray bandwidth is n + 3 S ceil(n / S), 4n when S divides n")
{
    for (std::size_t s : {2u, 4u, 8u})
        for (std::size_t n : {16u, 64u, 256u, 100u, 37u}) {
            const auto d = static_cast<std::size_t>(std::floor(0.5 * static_cast<double>(n)));
            std::size_t done = 0;
            for (std::uint64_t seed = 1; seed <= 20 && done < 3; ++seed) {
                RSprayCase c(n, d, seed + n);
                try {
                    c.run(s, 0.5);
                } catch (const ShuffleAborted&) {
                    continue;
                }
                ++done;
                const auto bw = c.bench.store().metrics().bandwidth_blocks;
                CHECK(bw == n + 3 * s * ((n + s - 1) / s));
                if (n % s == 0)
                    CHECK(bw == 4 * n);
            }
            CHECK(done > 0);
        }
}

TEST_CASE("RSpray precondition and aborts")
{
    RSprayCase tight(8, 5, 1);
    CHECK_THROWS_AS(tight.run(2, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(tight.run(0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(tight.run(2, 1.5), std::invalid_argument);

    // four buckets of one slot: two destinations share a bucket a quarter of
    // the time
    std::size_t aborts = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        RSprayCase c(4, 2, seed);
        try {
            c.run(4, 0.5);
        } catch (const ShuffleAborted& e) {
            ++aborts;
            CHECK(e.metrics().aborted);
        }
    }
    CHECK(aborts > 20);
    CHECK(aborts < 100);
}

TEST_CASE("RSpray aborts never occur at n / S = 64")
{
    std::size_t aborts = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        RSprayCase c(512, 256, seed);
        try {
            c.run(8, 0.5);
        } catch (const ShuffleAborted&) {
            ++aborts;
        }
    }
    CHECK(aborts == 0);
}

TEST_CASE("N = S^2 is a single CacheShuffleRoot call")
{
    Bench b(256, 256, 4);
    RecursiveTrace trace;
    const auto m = cache_shuffle(b.env(), b.io(), b.pi, b.sigma, {16, 0.5}, &trace);
    REQUIRE(trace.calls.size() == 1);
    CHECK(trace.calls[0].kind == CallKind::kRoot);
    CHECK(m.bandwidth_blocks == trace.bandwidth());
    CHECK(b.misplaced() == 0);
}

TEST_CASE("N = 4096, S = 16, eps = 0.5 is correct and bandwidth matches the per-call sum")
{
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Bench b(4096, 4096, seed);
        RecursiveTrace trace;
        const auto m = cache_shuffle(b.env(), b.io(), b.pi, b.sigma, {16, 0.5}, &trace);
        CHECK(b.misplaced() == 0);
        CHECK(m.bandwidth_blocks == trace.bandwidth());
        std::size_t levels = 0;
        for (const auto& c : trace.calls)
            levels = std::max(levels, c.level + 1);
        CHECK(levels == 2);
        const double per = static_cast<double>(m.bandwidth_blocks) /
                           (4096.0 * std::log(4096.0) / std::log(16.0));
        MESSAGE("bandwidth / (N log_S N) = " << per);
        CHECK(per < 10.0);
    }
}

TEST_CASE("recursive levels keep an eps' fraction of dummies")
{
    for (std::size_t s : {4u, 8u})
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            Bench b(2048, 2048, seed * 7 + s);
            RecursiveTrace trace;
            const double eps = 0.5;
            try {
                cache_shuffle(b.env(), b.io(), b.pi, b.sigma, {s, eps}, &trace);
            } catch (const ShuffleAborted&) {
                continue;
            }
            CHECK(b.misplaced() == 0);
            CHECK(b.store().metrics().bandwidth_blocks == trace.bandwidth());
            bool deep = false;
            for (const auto& c : trace.calls) {
                if (c.kind == CallKind::kRSpray) {
                    deep = true;
                    CHECK(static_cast<double>(c.d) <= (1.0 - level_slack(eps)) * static_cast<double>(c.n));
                }
                if (c.kind != CallKind::kRoot)
                    CHECK(c.bandwidth == c.n + 3 * c.rounds * c.buckets);
            }
            if (s == 4)
                CHECK(deep);
        }
}

TEST_CASE("correctness across budgets and slack")
{
    struct Config {
        std::size_t n, s;
        double eps;
    };
    // zero aborts expected here; small n / S regimes are exercised below
    const Config steady[] = {{300, 32, 0.5}, {1000, 16, 0.5}, {1000, 32, 0.25}, {1000, 32, 1.0},
                             {4096, 8, 0.5},  {4096, 16, 0.25}, {4096, 16, 1.0}, {4096, 32, 0.5}};
    for (const auto& c : steady)
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            Bench b(c.n, c.n, seed + 100 * c.s + c.n);
            CHECK_NOTHROW(cache_shuffle(b.env(), b.io(), b.pi, b.sigma, {c.s, c.eps}));
            CHECK(b.misplaced() == 0);
        }
}

TEST_CASE("runs that survive small n / S are still correct")
{
    std::size_t aborted = 0, completed = 0;
    for (std::size_t n : {300u, 1000u})
        for (std::size_t s : {8u, 16u})
            for (double eps : {0.25, 0.5, 1.0})
                for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                    Bench b(n, n, seed + 100 * s + n);
                    try {
                        cache_shuffle(b.env(), b.io(), b.pi, b.sigma, {s, eps});
                    } catch (const ShuffleAborted& e) {
                        CHECK(e.metrics().aborted);
                        ++aborted;
                        continue;
                    }
                    ++completed;
                    CHECK(b.misplaced() == 0);
                }
    MESSAGE("small-regime runs: " << completed << " completed, " << aborted << " aborted");
    CHECK(completed > 0);
}

TEST_CASE("spray queues stay under the cache cap")
{
    Bench b(4096, 4096, 3, {}, CipherMode::kPassthrough);
    const double eps = 0.5;
    const auto m = cache_shuffle(b.env(), b.io(), b.pi, b.sigma, {16, eps});
    const double q = std::ceil((1.0 + eps) * 16.0);
    CHECK(static_cast<double>(m.queue_max) <= default_delta(eps) * q);
    CHECK(static_cast<double>(m.client_high_water) <= default_delta(eps) * q + 4096.0 / 16.0);
}

TEST_CASE("parameter checks")
{
    Bench b(64, 64, 1);
    CHECK_THROWS_AS(cache_shuffle(b.env(), b.io(), b.pi, b.sigma, {1, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(cache_shuffle(b.env(), b.io(), b.pi, b.sigma, {8, 0.0}), std::invalid_argument);
    RecursiveConfig gated{4, 0.5, 0.0, 16.0};
    CHECK_THROWS_AS(cache_shuffle(b.env(), b.io(), b.pi, b.sigma, gated), std::invalid_argument);
    RecursiveConfig open{80, 0.5, 0.0, 16.0};
    CHECK_NOTHROW(cache_shuffle(b.env(), b.io(), b.pi, b.sigma, open));
}
