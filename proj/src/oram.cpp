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

#include "obsh/oram.hpp"

#include <stdexcept>
#include <string>

#include "obsh/errors.hpp"
#include "obsh/shuffle.hpp"

namespace obsh {

namespace {

std::size_t block_size_of(const std::vector<std::vector<std::uint8_t>>& payloads)
{
    if (payloads.empty())
        throw std::invalid_argument("ORAM needs at least one block");
    const std::size_t b = payloads.front().size();
    for (const auto& p : payloads)
        if (p.size() != b)
            throw InvalidBlock("ORAM blocks must share one size");
    return b;
}

} // namespace

SquareRootOram::SquareRootOram(const std::vector<std::vector<std::uint8_t>>& payloads, const Key& key,
                               std::uint64_t seed, const OramOptions& options)
    : n_(payloads.size()),
      epoch_(ceil_sqrt(payloads.size())),
      cipher_(key, block_size_of(payloads), options.cipher_mode),
      rng_(derive_seed(seed, 0)),
      nonce_rng_(derive_seed(seed, 1)),
      store_(cipher_.ciphertext_size(), ServerStore::kUnlimited, options.transcript),
      source_(0),
      pos_(random_permutation(n_, n_, rng_)),
      untouched_(IndexPool::full(n_)),
      payload_buf_(cipher_.block_size())
{
    source_ = store_.create_array("Source0", n_);
    std::vector<std::uint8_t> ct(cipher_.ciphertext_size());
    for (std::size_t slot = 0; slot < n_; ++slot) {
        const BlockId id = pos_.id_at(slot);
        cipher_.seal(id, payloads[id - 1], nonce_rng_, ct);
        store_.install(source_, slot, ct);
    }
}

std::vector<BlockId> SquareRootOram::stash_ids() const
{
    std::vector<BlockId> ids;
    ids.reserve(stash_.size());
    for (const auto& [id, payload] : stash_)
        ids.push_back(id);
    return ids;
}

BlockId SquareRootOram::fetch_position(std::uint64_t pos)
{
    untouched_.erase(pos);
    const BlockId id = cipher_.open(store_.download(source_, pos), payload_buf_);
    if (id != pos_.id_at(pos))
        throw ProtocolViolation("Source[" + std::to_string(pos) + "] holds block " + std::to_string(id) +
                                ", position map says " + std::to_string(pos_.id_at(pos)));
    stash_.emplace(id, payload_buf_);
    store_.flush();
    return id;
}

Block SquareRootOram::query(BlockId q)
{
    if (q == kDummyId || q > n_)
        throw std::out_of_range("query id " + std::to_string(q) + " outside [1, " + std::to_string(n_) + "]");
    if (stash_.contains(q))
        fetch_position(untouched_.take_random(rng_));
    else
        fetch_position(pos_.slot_of(q));
    Block out{q, stash_.at(q)};
    if (stash_.size() == epoch_)
        rebuild();
    return out;
}

void SquareRootOram::rebuild()
{
    if (stash_.size() != epoch_)
        throw InvalidState("rebuild needs a full epoch: " + std::to_string(stash_.size()) + " of " +
                           std::to_string(epoch_) + " queries");
    const std::uint64_t before = store_.metrics().bandwidth_blocks;
    auto sigma = random_permutation(n_, n_, rng_);
    std::vector<Block> held;
    held.reserve(stash_.size());
    for (auto& [id, payload] : stash_)
        held.push_back(Block{id, std::move(payload)});
    const TouchedSet touched(stash_ids(), n_);

    const ArrayId dest = store_.create_array("Source" + std::to_string(epochs_ + 1), n_);
    // The stash moves into the shuffle, which accounts for it again.
    store_.discard(held.size());
    BasicOptions opts;
    opts.preloaded = held;
    ShuffleEnv env{store_, cipher_, rng_, nonce_rng_};
    k_cache_shuffle_basic(env, ShuffleIo{source_, dest}, pos_, sigma, touched, opts);

    store_.release_array(source_);
    source_ = dest;
    pos_ = std::move(sigma);
    stash_.clear();
    untouched_ = IndexPool::full(n_);
    ++epochs_;
    last_rebuild_bandwidth_ = store_.metrics().bandwidth_blocks - before;
}

} // namespace obsh
