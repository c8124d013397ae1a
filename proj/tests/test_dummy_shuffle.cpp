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
#include <vector>

#include "doctest.h"
#include "obsh/dummy_shuffle.hpp"
#include "obsh/errors.hpp"
#include "support.hpp"

using namespace obsh;
using obsh::testing::Bench;

namespace {

SetupOptions lanes()
{
    SetupOptions o;
    o.lane_dest = true;
    return o;
}

std::uint64_t expected_bandwidth(std::size_t n, std::size_t d, std::size_t l, double eps)
{
    const std::size_t m = n + d;
    const std::size_t parts = (m + l - 1) / l;
    const double rho = static_cast<double>(n) / static_cast<double>(m);
    const auto points = static_cast<std::uint64_t>(std::ceil((1.0 + eps) * rho * static_cast<double>(l) - 1e-9));
    return m + parts * points;
}

std::vector<std::uint64_t> first_positions(std::size_t k)
{
    std::vector<std::uint64_t> t(k);
    for (std::size_t i = 0; i < k; ++i)
        t[i] = i;
    return t;
}

struct Tally {
    std::size_t completed = 0;
    std::size_t aborted = 0;
};

template <class Check>
Tally until_completed(std::size_t n, std::size_t d, std::size_t k, const DummyShuffleConfig& cfg, std::size_t target,
                      std::size_t max_seeds, Check check)
{
    Tally t;
    for (std::uint64_t seed = 1; seed <= max_seeds && t.completed < target; ++seed) {
        Bench b(n + d, n, seed * 104729 + n + d, lanes(), CipherMode::kPassthrough);
        DummyReport rep;
        try {
            rep = k_cache_shuffle_dummy(b.env(), b.io(), b.pi, b.sigma, first_positions(k), cfg);
        } catch (const ShuffleAborted& e) {
            CHECK(e.metrics().aborted);
            ++t.aborted;
            continue;
        }
        ++t.completed;
        CHECK(b.misplaced_lanes() == 0);
        check(b, rep);
    }
    return t;
}

} // namespace

TEST_CASE("shape arithmetic")
{
    const auto s = dummy_shape(512, 1024, {64, 0.25});
    CHECK(s.partitions == 16);
    CHECK(s.points == 40);
    CHECK(s.real_fraction == 0.5);
    CHECK(s.max_partition == 80.0);
    CHECK(dummy_bandwidth(512, 1024, {64, 0.25}) == 1024 + 16 * 40);
    CHECK_THROWS_AS(dummy_shape(0, 4, {}), std::invalid_argument);
    CHECK_THROWS_AS(dummy_shape(5, 4, {}), std::invalid_argument);
    CHECK_THROWS_AS(dummy_shape(4, 4, {0, 0.25}), std::invalid_argument);
}

TEST_CASE("D = N, L = 256, eps = 0.25 costs 3.25 N")
{
    for (std::size_t n : {1024u, 4096u}) {
        const auto t = until_completed(n, n, 0, {256, 0.25}, 3, 20, [n](Bench& b, const DummyReport& rep) {
            const auto bw = b.store().metrics().bandwidth_blocks;
            CHECK(bw == expected_bandwidth(n, n, 256, 0.25));
            CHECK(bw == rep.metrics.bandwidth_blocks);
            const double ratio = static_cast<double>(bw) / static_cast<double>(n);
            CHECK(ratio >= 3.0);
            CHECK(ratio <= 3.4);
            CHECK(bw < 4 * n);
        });
        CHECK(t.completed == 3);
    }
}

TEST_CASE("bandwidth identity over sizes and slack")
{
    struct Case {
        std::size_t n, d, l;
        double eps;
    };
    const Case cases[] = {{100, 300, 32, 0.5}, {1000, 1000, 128, 0.5}, {2048, 1024, 128, 0.5},
                          {3000, 1000, 256, 0.25}, {700, 50, 64, 1.0},   {1024, 3072, 256, 0.5}};
    for (const auto& c : cases) {
        const auto t = until_completed(c.n, c.d, c.n / 10, {c.l, c.eps}, 5, 100, [&](Bench& b, const DummyReport& rep) {
            const auto& m = b.store().metrics();
            CHECK(m.bandwidth_blocks == expected_bandwidth(c.n, c.d, c.l, c.eps));
            CHECK(m.bandwidth_blocks == dummy_bandwidth(c.n, c.n + c.d, {c.l, c.eps}));
            CHECK(m.downloads == c.n + c.d);
            CHECK(m.uploads == 0);
            CHECK(m.eval_coefficient_blocks == rep.shape.partitions * rep.shape.points);
        });
        MESSAGE("N=" << c.n << " D=" << c.d << " L=" << c.l << " eps=" << c.eps << ": " << t.completed
                     << " done, " << t.aborted << " aborted");
        CHECK(t.completed == 5);
    }
}

TEST_CASE("D = 0 interpolates every partition fully")
{
    const auto t = until_completed(1024, 0, 0, {128, 0.25}, 3, 20, [](Bench& b, const DummyReport& rep) {
        CHECK(b.store().metrics().bandwidth_blocks == 1024 + 8 * 160);
        CHECK(rep.shape.points == 160);
        // no dummy indices exist, so padding points lie past the array
        CHECK(rep.outside_pads == 8 * 160 - 1024);
    });
    CHECK(t.completed == 3);
}

TEST_CASE("N = D = 512, L = 64, eps = 0.25 places every real block")
{
    const auto t = until_completed(512, 512, 0, {64, 0.25}, 5, 200, [](Bench&, const DummyReport&) {});
    MESSAGE("N=D=512 L=64: " << t.completed << " done, " << t.aborted << " aborted");
    CHECK(t.completed == 5);
}

TEST_CASE("correctness grid with touched real and dummy positions")
{
    for (std::size_t n : {256u, 1024u, 4096u})
        for (std::size_t d : {std::size_t{0}, n / 2, n, 3 * n}) {
            if (n + d > 4096 * 2)
                continue;
            const auto t = until_completed(n, d, n / 8, {128, 0.5}, 5, 100, [](Bench&, const DummyReport&) {});
            CHECK(t.completed == 5);
        }
}

TEST_CASE("each partition is one evaluation over its own indices with a fixed point count")
{
    const auto t = until_completed(2000, 2000, 100, {128, 0.5}, 2, 20, [](Bench& b, const DummyReport& rep) {
        const auto& tr = b.store().transcript();
        std::vector<std::vector<std::uint64_t>> parts(rep.shape.partitions);
        for (std::size_t x = 0; x < rep.dest_partition.size(); ++x)
            parts[rep.dest_partition[x]].push_back(x);
        std::size_t p = 0;
        std::size_t downloads_since = 0;
        std::size_t left = 4000 - 100;
        for (const auto& e : tr.events()) {
            if (e.kind == EventKind::kDownload) {
                ++downloads_since;
                continue;
            }
            REQUIRE(e.kind == EventKind::kServerEval);
            CHECK(e.coefficient_blocks == rep.shape.points);
            const auto pts = tr.eval_points(e);
            CHECK(std::vector<std::uint64_t>(pts.begin(), pts.end()) == parts[p]);
            // one download per Dest index until every untouched position is
            // gone; the first partition also carries the touched downloads
            const std::size_t expect = std::min(parts[p].size(), left);
            left -= expect;
            CHECK(downloads_since == expect + (p == 0 ? 100 : 0));
            downloads_since = 0;
            ++p;
        }
        CHECK(p == rep.shape.partitions);
        CHECK(left == 0);
        MESSAGE("client high water " << b.store().metrics().client_high_water);
    });
    CHECK(t.completed == 2);
}

TEST_CASE("input validation")
{
    Bench plain(64, 32, 1);
    CHECK_THROWS_AS(k_cache_shuffle_dummy(plain.env(), plain.io(), plain.pi, plain.sigma, {}, {16, 0.5}),
                    std::invalid_argument);
    Bench b(64, 32, 1, lanes());
    const std::vector<std::uint64_t> dup{3, 3};
    CHECK_THROWS_AS(k_cache_shuffle_dummy(b.env(), b.io(), b.pi, b.sigma, dup, {16, 0.5}), std::invalid_argument);
    const std::vector<std::uint64_t> far{64};
    CHECK_THROWS_AS(k_cache_shuffle_dummy(b.env(), b.io(), b.pi, b.sigma, far, {16, 0.5}), std::invalid_argument);
    CHECK_THROWS_AS(k_cache_shuffle_dummy(b.env(), b.io(), b.pi, b.sigma, {}, {16, 0.5, 16.0}),
                    std::invalid_argument);
    SeededRng r(2);
    const auto other = random_permutation(64, 31, r);
    CHECK_THROWS_AS(k_cache_shuffle_dummy(b.env(), b.io(), b.pi, other, {}, {16, 0.5}), std::invalid_argument);
}

TEST_CASE("oversized partitions abort with metrics attached")
{
    // L = 4 leaves (1 + eps) L = 5 indices per partition: overflow is common
    std::size_t aborts = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Bench b(200, 100, seed, lanes(), CipherMode::kPassthrough);
        try {
            k_cache_shuffle_dummy(b.env(), b.io(), b.pi, b.sigma, {}, {4, 0.25});
        } catch (const ShuffleAborted& e) {
            CHECK(e.metrics().aborted);
            ++aborts;
        }
    }
    CHECK(aborts == 20);
}
