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

#include <cstddef>
#include <cstdint>
#include <vector>

#include "obsh/crypto.hpp"
#include "obsh/permutation.hpp"
#include "obsh/random.hpp"
#include "obsh/shuffle.hpp"
#include "obsh/storage.hpp"

namespace obsh::testing {

/// One seeded execution environment: permutations, key and a prepared
/// server.
struct Bench {
    Bench(std::size_t m, std::size_t n, std::uint64_t seed, const SetupOptions& options = {},
          CipherMode mode = CipherMode::kAesGcm)
        : perm_rng(derive_seed(seed, 1)),
          rng(derive_seed(seed, 2)),
          nonce(derive_seed(seed, 3)),
          cipher(keygen(derive_seed(seed, 4)), kDefaultBlockSize, mode),
          pi(random_permutation(m, n, perm_rng)),
          sigma(random_permutation(m, n, perm_rng)),
          setup(make_setup(pi, cipher, nonce, options))
    {}

    Bench(const PermutationMap& p, const PermutationMap& s, std::uint64_t seed, const SetupOptions& options = {})
        : perm_rng(derive_seed(seed, 1)),
          rng(derive_seed(seed, 2)),
          nonce(derive_seed(seed, 3)),
          cipher(keygen(derive_seed(seed, 4))),
          pi(p),
          sigma(s),
          setup(make_setup(pi, cipher, nonce, options))
    {}

    ShuffleEnv env() { return {setup.store, cipher, rng, nonce}; }
    ShuffleIo io() const { return setup.io; }
    ServerStore& store() { return setup.store; }
    std::size_t misplaced() const { return count_misplaced(setup.store, setup.io.dest, sigma, cipher); }
    std::size_t misplaced_lanes() const
    {
        return count_misplaced_lanes(setup.store, setup.io.dest, sigma, cipher);
    }

    SeededRng perm_rng;
    SeededRng rng;
    SeededRng nonce;
    Cipher cipher;
    PermutationMap pi;
    PermutationMap sigma;
    ShuffleSetup setup;
};

/// Download-everything reference: the plaintext that must end up at each
/// Dest slot, dummies as kDummyId.
inline std::vector<Block> reference_dest(const ServerStore& store, ArrayId source, const PermutationMap& pi,
                                         const PermutationMap& sigma, const Cipher& cipher)
{
    std::vector<Block> held(pi.real_count() + 1);
    for (std::size_t slot = 0; slot < pi.size(); ++slot) {
        const Block b = cipher.decrypt(store.peek(source, slot));
        if (!b.is_dummy())
            held[b.id] = b;
    }
    std::vector<Block> dest(sigma.size(), Block::dummy(cipher.block_size()));
    for (std::size_t slot = 0; slot < sigma.size(); ++slot)
        if (sigma.id_at(slot) != kDummyId)
            dest[slot] = held[sigma.id_at(slot)];
    return dest;
}

inline std::vector<std::uint64_t> download_slots(const ServerStore& store, ArrayId array)
{
    std::vector<std::uint64_t> out;
    for (const auto& [a, i] : store.transcript().downloads())
        if (a == array)
            out.push_back(i);
    return out;
}

} // namespace obsh::testing
