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

#include "obsh/dummy_shuffle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "obsh/errors.hpp"
#include "obsh/field.hpp"

namespace obsh {

DummyShape dummy_shape(std::size_t reals, std::size_t slots, const DummyShuffleConfig& cfg)
{
    if (slots == 0 || reals == 0 || reals > slots)
        throw std::invalid_argument("need 0 < N <= N + D");
    if (cfg.partition_size == 0)
        throw std::invalid_argument("partition size L must be positive");
    if (!(cfg.epsilon > 0.0))
        throw std::invalid_argument("epsilon must be positive");
    DummyShape s;
    s.slots = slots;
    s.real_fraction = static_cast<double>(reals) / static_cast<double>(slots);
    s.partitions = ceil_div(slots, cfg.partition_size);
    s.points = std::max<std::size_t>(
        1, ceil_real((1.0 + cfg.epsilon) * static_cast<double>(reals) * static_cast<double>(cfg.partition_size) /
                     static_cast<double>(slots)));
    s.max_partition = (1.0 + cfg.epsilon) * static_cast<double>(cfg.partition_size);
    return s;
}

std::uint64_t dummy_bandwidth(std::size_t reals, std::size_t slots, const DummyShuffleConfig& cfg)
{
    const auto s = dummy_shape(reals, slots, cfg);
    return slots + static_cast<std::uint64_t>(s.partitions) * s.points;
}

DummyReport k_cache_shuffle_dummy(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                                  std::span<const std::uint64_t> touched, const DummyShuffleConfig& cfg)
{
    const std::size_t m = pi.size();
    const std::size_t n = pi.real_count();
    if (sigma.size() != m || sigma.real_count() != n)
        throw std::invalid_argument("pi and sigma must cover the same slots and reals");
    if (cfg.log_gate > 0.0 && n > 1 &&
        static_cast<double>(cfg.partition_size) < cfg.log_gate * std::log(static_cast<double>(n)))
        throw std::invalid_argument("partition size L = " + std::to_string(cfg.partition_size) + " is below " +
                                    std::to_string(cfg.log_gate) + " ln N");
    ServerStore& store = env.store;
    if (store.array_kind(io.dest) != SlotKind::kLanes)
        throw std::invalid_argument("Dest must be a lane array");
    if (store.array_size(io.dest) != m)
        throw std::invalid_argument("Dest must have N + D slots");

    DummyReport rep;
    rep.shape = dummy_shape(n, m, cfg);
    const std::size_t parts = rep.shape.partitions;
    const std::size_t points = rep.shape.points;
    ClientOps ops(env);
    std::vector<std::uint32_t> handle_of_id(n + 1, UINT32_MAX);

    std::vector<std::uint64_t> revealed(touched.begin(), touched.end());
    std::sort(revealed.begin(), revealed.end());
    for (std::size_t i = 0; i < revealed.size(); ++i) {
        if (revealed[i] >= m)
            throw std::invalid_argument("touched position " + std::to_string(revealed[i]) + " out of range");
        if (i > 0 && revealed[i] == revealed[i - 1])
            throw std::invalid_argument("touched position " + std::to_string(revealed[i]) + " listed twice");
    }

    auto download_pos = [&](std::uint64_t pos) {
        auto h = ops.fetch({io.source, pos});
        if (!h)
            return;
        const BlockId id = ops.slab().id(*h);
        if (id > n || pi.slot_of(id) != pos)
            throw ProtocolViolation("Source[" + std::to_string(pos) + "] holds an unexpected block");
        handle_of_id[id] = *h;
    };

    for (auto pos : revealed)
        download_pos(pos);
    if (!revealed.empty())
        store.flush();

    std::vector<std::size_t> untouched;
    untouched.reserve(m - revealed.size());
    for (std::size_t pos = 0, t = 0; pos < m; ++pos) {
        if (t < revealed.size() && revealed[t] == pos) {
            ++t;
            continue;
        }
        untouched.push_back(pos);
    }
    IndexPool tb_down(m, untouched);

    rep.dest_partition.resize(m);
    std::vector<std::vector<std::uint64_t>> dest_ind(parts);
    for (std::size_t x = 0; x < m; ++x) {
        const auto p = static_cast<std::uint32_t>(env.rng.below(parts));
        rep.dest_partition[x] = p;
        dest_ind[p].push_back(x);
    }

    std::vector<std::uint8_t> ct(env.cipher.ciphertext_size());
    const std::size_t lanes = lane_count(ct.size());
    std::vector<InterpolationPoint> pts;
    pts.reserve(points);
    for (std::size_t i = 0; i < parts; ++i) {
        const auto& ind = dest_ind[i];
        std::size_t reals = 0;
        for (auto x : ind)
            if (sigma.id_at(x) != kDummyId)
                ++reals;
        if (static_cast<double>(ind.size()) > rep.shape.max_partition)
            throw ShuffleAborted("partition " + std::to_string(i + 1) + " has " + std::to_string(ind.size()) +
                                     " indices, above (1 + eps) L",
                                 store.metrics());
        if (reals > points)
            throw ShuffleAborted("partition " + std::to_string(i + 1) + " has " + std::to_string(reals) +
                                     " real blocks for " + std::to_string(points) + " points",
                                 store.metrics());

        bool downloaded = false;
        for (auto x : ind) {
            const BlockId id = sigma.id_at(x);
            if (id != kDummyId && tb_down.contains(pi.slot_of(id))) {
                tb_down.erase(pi.slot_of(id));
                download_pos(pi.slot_of(id));
                downloaded = true;
            } else if (!tb_down.empty()) {
                download_pos(tb_down.take_random(env.rng));
                downloaded = true;
            }
        }
        if (downloaded)
            store.flush();

        pts.clear();
        for (auto x : ind) {
            const BlockId id = sigma.id_at(x);
            if (id == kDummyId)
                continue;
            const auto h = handle_of_id[id];
            if (h == UINT32_MAX)
                throw ProtocolViolation("block " + std::to_string(id) + " unavailable for Dest[" + std::to_string(x) +
                                        "]");
            env.cipher.seal(id, ops.slab().payload(h), env.nonce_rng, ct);
            pts.push_back({FieldElement{x}, ct_to_lanes(ct)});
            ops.slab().release(h);
            handle_of_id[id] = UINT32_MAX;
            store.discard();
        }
        auto pad = [&](std::uint64_t x) {
            std::vector<FieldElement> y(lanes);
            for (auto& v : y)
                v = FieldElement{env.nonce_rng.below(FieldElement::kPrime)};
            pts.push_back({FieldElement{x}, std::move(y)});
        };
        for (auto x : ind) {
            if (pts.size() == points)
                break;
            if (sigma.id_at(x) == kDummyId)
                pad(x);
        }
        for (std::uint64_t x = m; pts.size() < points; ++x) {
            pad(x);
            ++rep.outside_pads;
        }
        const auto poly = lagrange_interpolate(pts);
        store.server_eval(io.dest, ind, poly);
        store.flush();
    }
    rep.metrics = store.metrics();
    return rep;
}

} // namespace obsh
