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

#include "obsh/shuffle.hpp"

#include <algorithm>
#include <stdexcept>

#include "obsh/errors.hpp"
#include "obsh/field.hpp"

namespace obsh {

std::size_t ceil_sqrt(std::size_t n)
{
    auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n)
        --r;
    while (r * r < n)
        ++r;
    return r;
}

std::size_t ceil_real(double x)
{
    const double r = std::round(x);
    if (std::fabs(x - r) < 1e-9 * std::max(1.0, std::fabs(x)))
        return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::ceil(x));
}

std::size_t floor_real(double x)
{
    const double r = std::round(x);
    if (std::fabs(x - r) < 1e-9 * std::max(1.0, std::fabs(x)))
        return static_cast<std::size_t>(r);
    return static_cast<std::size_t>(std::floor(x));
}

std::vector<std::uint8_t> payload_for(BlockId id, std::size_t block_size)
{
    std::vector<std::uint8_t> p(block_size);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < block_size; ++i) {
        if (i % 8 == 0)
            word = derive_seed(id, i / 8);
        p[i] = static_cast<std::uint8_t>(word >> (8 * (i % 8)));
    }
    return p;
}

ClientOps::ClientOps(ShuffleEnv env)
    : env_(env), slab_(env.cipher.block_size()), buf_(env.cipher.ciphertext_size())
{}

std::optional<BlockSlab::Handle> ClientOps::fetch(SlotRef from)
{
    auto ct = env_.store.download(from.array, from.slot);
    const auto h = slab_.alloc();
    const BlockId id = env_.cipher.open(ct, slab_.payload(h));
    if (id == kDummyId) {
        slab_.release(h);
        env_.store.discard();
        return std::nullopt;
    }
    slab_.id(h) = id;
    return h;
}

void ClientOps::put(BlockSlab::Handle h, SlotRef to)
{
    env_.cipher.seal(slab_.id(h), slab_.payload(h), env_.nonce_rng, buf_);
    env_.store.upload(to.array, to.slot, buf_, Origin::kClient);
    slab_.release(h);
}

void ClientOps::put_dummy(SlotRef to)
{
    env_.cipher.encrypt_dummy_into(env_.nonce_rng, buf_);
    env_.store.upload(to.array, to.slot, buf_, Origin::kFresh);
}

BlockSlab::Handle ClientOps::adopt(BlockId id, std::span<const std::uint8_t> payload)
{
    const auto h = slab_.alloc();
    slab_.id(h) = id;
    std::copy(payload.begin(), payload.end(), slab_.payload(h).begin());
    return h;
}

namespace {

ShuffleSetup make_setup_impl(const PermutationMap& pi, const Cipher& cipher, RandomSource& nonce_rng,
                             const std::vector<std::uint8_t>* payloads, const SetupOptions& options)
{
    const std::size_t m = pi.size();
    const std::size_t capacity =
        options.capacity_factor == 0 ? ServerStore::kUnlimited : options.capacity_factor * std::max<std::size_t>(m, 1);
    ShuffleSetup setup{ServerStore(cipher.ciphertext_size(), capacity, options.transcript), {}};
    setup.io.source = setup.store.create_array("Source", m);
    if (options.lane_dest)
        setup.io.dest =
            setup.store.create_array("Dest", m, SlotKind::kLanes, lane_count(cipher.ciphertext_size()));
    else
        setup.io.dest = setup.store.create_array("Dest", m);

    std::vector<std::uint8_t> ct(cipher.ciphertext_size());
    const std::vector<std::uint8_t> zero(cipher.block_size(), 0);
    for (std::size_t slot = 0; slot < m; ++slot) {
        const BlockId id = pi.id_at(slot);
        if (id == kDummyId)
            cipher.seal(kDummyId, zero, nonce_rng, ct);
        else if (payloads != nullptr)
            cipher.seal(id, payloads[id - 1], nonce_rng, ct);
        else
            cipher.seal(id, payload_for(id, cipher.block_size()), nonce_rng, ct);
        setup.store.install(setup.io.source, slot, ct);
    }
    return setup;
}

} // namespace

ShuffleSetup make_setup(const PermutationMap& pi, const Cipher& cipher, RandomSource& nonce_rng,
                        const SetupOptions& options)
{
    return make_setup_impl(pi, cipher, nonce_rng, nullptr, options);
}

ShuffleSetup make_setup(const PermutationMap& pi, const Cipher& cipher, RandomSource& nonce_rng,
                        std::span<const std::vector<std::uint8_t>> payloads, const SetupOptions& options)
{
    if (payloads.size() != pi.real_count())
        throw std::invalid_argument("payload count does not match the permutation");
    for (const auto& p : payloads)
        if (p.size() != cipher.block_size())
            throw InvalidBlock("payload of " + std::to_string(p.size()) + " bytes, expected " +
                               std::to_string(cipher.block_size()));
    return make_setup_impl(pi, cipher, nonce_rng, payloads.data(), options);
}

std::size_t count_misplaced(const ServerStore& store, ArrayId dest, const PermutationMap& sigma, const Cipher& cipher)
{
    std::size_t bad = 0;
    std::vector<std::uint8_t> payload(cipher.block_size());
    for (BlockId id = 1; id <= sigma.real_count(); ++id) {
        const std::size_t slot = sigma.slot_of(id);
        if (!store.occupied(dest, slot)) {
            ++bad;
            continue;
        }
        try {
            const BlockId got = cipher.open(store.peek(dest, slot), payload);
            if (got != id || payload != payload_for(id, cipher.block_size()))
                ++bad;
        } catch (const CorruptCiphertext&) {
            ++bad;
        }
    }
    return bad;
}

std::size_t count_misplaced_lanes(const ServerStore& store, ArrayId dest, const PermutationMap& sigma,
                                  const Cipher& cipher)
{
    std::size_t bad = 0;
    std::vector<std::uint8_t> payload(cipher.block_size());
    for (BlockId id = 1; id <= sigma.real_count(); ++id) {
        const std::size_t slot = sigma.slot_of(id);
        if (!store.occupied(dest, slot)) {
            ++bad;
            continue;
        }
        try {
            const auto ct = lanes_to_ct(store.peek_lanes(dest, slot), cipher.ciphertext_size());
            const BlockId got = cipher.open(ct, payload);
            if (got != id || payload != payload_for(id, cipher.block_size()))
                ++bad;
        } catch (const std::exception&) {
            ++bad;
        }
    }
    return bad;
}

} // namespace obsh
