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

#include <sstream>
#include <vector>

#include "doctest.h"
#include "obsh/crypto.hpp"
#include "obsh/errors.hpp"
#include "obsh/field.hpp"
#include "obsh/kshuffle.hpp"
#include "obsh/shuffle.hpp"
#include "obsh/storage.hpp"

using namespace obsh;

namespace {

struct Fixture {
    Cipher cipher{keygen(1)};
    SeededRng nonce{7};
    ServerStore store{cipher.ciphertext_size()};

    std::vector<std::uint8_t> seal(BlockId id)
    {
        std::vector<std::uint8_t> ct(cipher.ciphertext_size());
        cipher.seal(id, payload_for(id, cipher.block_size()), nonce, ct);
        return ct;
    }
};

} // namespace

TEST_CASE("fresh store has zero metrics")
{
    ServerStore store(52);
    CHECK(store.metrics_snapshot() == Metrics{});
    CHECK(store.transcript().empty());
}

TEST_CASE("download costs one block and is recorded")
{
    Fixture f;
    const ArrayId a = f.store.create_array("Source", 4);
    for (std::size_t i = 0; i < 4; ++i)
        f.store.install(a, i, f.seal(i + 1));
    CHECK(f.store.metrics().bandwidth_blocks == 0);

    const auto before = f.store.metrics().bandwidth_blocks;
    f.store.download(a, 2);
    CHECK(f.store.metrics().bandwidth_blocks == before + 1);
    const MoveEvent& last = f.store.transcript().events().back();
    CHECK(last.kind == EventKind::kDownload);
    CHECK(last.array == a);
    CHECK(last.index == 2);
    // the slot stays filled after download
    CHECK(f.store.occupied(a, 2));
}

TEST_CASE("Source[pi(l)] decrypts to block l")
{
    SeededRng rng(3);
    Fixture f;
    const auto pi = random_permutation(4, 4, rng);
    auto setup = make_setup(pi, f.cipher, f.nonce);
    for (BlockId l = 1; l <= 4; ++l) {
        auto ct = setup.store.download(setup.io.source, pi.slot_of(l));
        const Block b = f.cipher.decrypt(ct);
        CHECK(b.id == l);
        CHECK(b.payload == payload_for(l, f.cipher.block_size()));
    }
}

TEST_CASE("download errors on empty and out-of-range slots")
{
    Fixture f;
    const ArrayId a = f.store.create_array("A", 2);
    CHECK_THROWS_AS(f.store.download(a, 0), ProtocolViolation);
    CHECK_THROWS_AS(f.store.download(a, 2), ProtocolViolation);
    CHECK_THROWS_AS(f.store.download(a + 5, 0), ProtocolViolation);
    CHECK_THROWS_AS(f.store.upload(a, 3, f.seal(1), Origin::kFresh), ProtocolViolation);
}

TEST_CASE("upload then download returns the same bytes")
{
    Fixture f;
    const ArrayId a = f.store.create_array("A", 3);
    const auto ct = f.seal(9);
    f.store.upload(a, 1, ct, Origin::kFresh);
    const auto back = f.store.download(a, 1);
    CHECK(std::vector<std::uint8_t>(back.begin(), back.end()) == ct);
}

TEST_CASE("bandwidth is additive over uploads and downloads")
{
    Fixture f;
    const ArrayId a = f.store.create_array("A", 10);
    for (std::size_t i = 0; i < 10; ++i)
        f.store.upload(a, i, f.seal(i + 1), Origin::kFresh);
    for (std::size_t i = 0; i < 7; ++i)
        f.store.download(a, i);
    CHECK(f.store.metrics().bandwidth_blocks == 17);
    CHECK(f.store.metrics().uploads == 10);
    CHECK(f.store.metrics().downloads == 7);
    CHECK(f.store.transcript().bandwidth() == 17);
}

TEST_CASE("dummy and real uploads leave identical transcript events")
{
    Fixture f;
    const ArrayId a = f.store.create_array("A", 2);
    f.store.upload(a, 0, f.seal(kDummyId), Origin::kFresh);
    f.store.upload(a, 0, f.seal(5), Origin::kFresh);
    const auto ev = f.store.transcript().events();
    REQUIRE(ev.size() == 2);
    CHECK(ev[0] == ev[1]);
}

TEST_CASE("constant polynomial evaluation costs one block")
{
    Fixture f;
    const std::size_t lanes = lane_count(f.cipher.ciphertext_size());
    const ArrayId d = f.store.create_array("Dest", 5, SlotKind::kLanes, lanes);
    LanePolynomial poly;
    poly.lanes.assign(lanes, std::vector<FieldElement>{FieldElement{123}});
    const std::vector<std::uint64_t> idx{0, 2, 4};
    f.store.server_eval(d, idx, poly);
    CHECK(f.store.metrics().bandwidth_blocks == 1);
    CHECK(f.store.metrics().eval_coefficient_blocks == 1);
    for (auto x : idx)
        for (auto v : f.store.peek_lanes(d, x))
            CHECK(v == FieldElement{123});
    CHECK_FALSE(f.store.occupied(d, 1));

    const std::vector<std::uint64_t> dup{1, 1};
    CHECK_THROWS_AS(f.store.server_eval(d, dup, poly), ProtocolViolation);
}

TEST_CASE("interpolated points evaluate back to ciphertexts")
{
    Fixture f;
    const std::size_t c = f.cipher.ciphertext_size();
    const ArrayId d = f.store.create_array("Dest", 8, SlotKind::kLanes, lane_count(c));
    const auto ct3 = f.seal(3);
    const auto ct6 = f.seal(6);
    std::vector<InterpolationPoint> pts{{FieldElement{3}, ct_to_lanes(ct3)}, {FieldElement{6}, ct_to_lanes(ct6)}};
    const auto poly = lagrange_interpolate(pts);
    const std::vector<std::uint64_t> idx{3, 6};
    f.store.server_eval(d, idx, poly);
    CHECK(f.store.metrics().bandwidth_blocks == 2);
    const auto l3 = f.store.peek_lanes(d, 3);
    const auto l6 = f.store.peek_lanes(d, 6);
    CHECK(f.cipher.decrypt(lanes_to_ct(l3, c)).id == 3);
    CHECK(f.cipher.decrypt(lanes_to_ct(l6, c)).id == 6);
}

TEST_CASE("coefficient blocks equal the number of interpolation points")
{
    // (1 + eps) rho L with eps = 0.25, rho = 1/2, L = 64 gives 40
    const std::size_t points = 40;
    Fixture f;
    const std::size_t lanes = lane_count(f.cipher.ciphertext_size());
    const ArrayId d = f.store.create_array("Dest", 64, SlotKind::kLanes, lanes);
    std::vector<InterpolationPoint> pts;
    for (std::size_t i = 0; i < points; ++i)
        pts.push_back({FieldElement{i}, std::vector<FieldElement>(lanes, FieldElement{i * i})});
    const auto poly = lagrange_interpolate(pts);
    std::vector<std::uint64_t> idx(64);
    for (std::size_t i = 0; i < 64; ++i)
        idx[i] = i;
    f.store.server_eval(d, idx, poly);
    CHECK(f.store.metrics().bandwidth_blocks == points);
    CHECK(f.store.transcript().bandwidth() == points);
}

TEST_CASE("bandwidth equals downloads + uploads + coefficient blocks")
{
    Fixture f;
    const std::size_t lanes = lane_count(f.cipher.ciphertext_size());
    const ArrayId a = f.store.create_array("A", 4);
    const ArrayId d = f.store.create_array("D", 4, SlotKind::kLanes, lanes);
    for (std::size_t i = 0; i < 4; ++i)
        f.store.upload(a, i, f.seal(i + 1), Origin::kFresh);
    f.store.download(a, 0);
    f.store.download(a, 3);
    LanePolynomial poly;
    poly.lanes.assign(lanes, std::vector<FieldElement>(3, FieldElement{1}));
    const std::vector<std::uint64_t> idx{0, 1};
    f.store.server_eval(d, idx, poly);
    const Metrics m = f.store.metrics_snapshot();
    CHECK(m.bandwidth_blocks == m.downloads + m.uploads + m.eval_coefficient_blocks);
    CHECK(m.bandwidth_blocks == 9);
    CHECK(f.store.transcript().bandwidth() == 9);
}

TEST_CASE("client ledger tracks held blocks and the peak")
{
    Fixture f;
    const ArrayId a = f.store.create_array("A", 4);
    for (std::size_t i = 0; i < 4; ++i)
        f.store.install(a, i, f.seal(i + 1));
    for (std::size_t i = 0; i < 3; ++i)
        f.store.download(a, i);
    CHECK(f.store.client_held() == 3);
    f.store.discard();
    f.store.upload(a, 0, f.seal(1));
    CHECK(f.store.client_held() == 1);
    CHECK(f.store.metrics().client_high_water == 3);
    f.store.adopt(5);
    CHECK(f.store.metrics().client_high_water == 6);
    CHECK_THROWS_AS(f.store.discard(7), ProtocolViolation);
    ServerStore empty(f.cipher.ciphertext_size());
    const ArrayId b = empty.create_array("B", 1);
    CHECK_THROWS_AS(empty.upload(b, 0, f.seal(1)), ProtocolViolation);
}

TEST_CASE("capacity bounds live server slots")
{
    ServerStore store(52, 10);
    const ArrayId a = store.create_array("A", 6);
    CHECK_THROWS_AS(store.create_array("B", 5), ProtocolViolation);
    store.release_array(a);
    CHECK_NOTHROW(store.create_array("B", 10));
    CHECK(store.peak_slots() == 10);
}

TEST_CASE("roundtrips count flushes")
{
    ServerStore store(52);
    store.flush();
    store.flush();
    CHECK(store.metrics().roundtrips == 2);
}

TEST_CASE("transcript text format")
{
    Fixture f;
    const ArrayId a = f.store.create_array("Source", 3);
    const ArrayId d = f.store.create_array("Dest", 3, SlotKind::kLanes, lane_count(f.cipher.ciphertext_size()));
    std::ostringstream live;
    f.store.stream_to(&live);
    f.store.upload(a, 2, f.seal(1), Origin::kFresh);
    f.store.download(a, 2);
    LanePolynomial poly;
    poly.lanes.assign(lane_count(f.cipher.ciphertext_size()), std::vector<FieldElement>(2, FieldElement{0}));
    const std::vector<std::uint64_t> idx{0, 2};
    f.store.server_eval(d, idx, poly);
    const std::string expected = "U Source 2\nD Source 2\nE Dest 2 0 2\n";
    CHECK(live.str() == expected);
    std::ostringstream replay;
    f.store.write_transcript(replay);
    CHECK(replay.str() == expected);
}

TEST_CASE("basic shuffle leaves the client at most K + 1 blocks")
{
    SeededRng rng(8);
    SeededRng nonce(9);
    Cipher cipher(keygen(2));
    for (std::size_t k : {0u, 1u, 4u, 16u}) {
        const auto pi = random_permutation(16, 16, rng);
        const auto sigma = random_permutation(16, 16, rng);
        auto setup = make_setup(pi, cipher, nonce);
        const auto touched = TouchedSet::random(16, k, rng);
        const auto m = k_cache_shuffle_basic({setup.store, cipher, rng, nonce}, setup.io, pi, sigma, touched);
        CHECK(m.client_high_water <= k + 1);
        CHECK(m.bandwidth_blocks == 32);
    }
}
