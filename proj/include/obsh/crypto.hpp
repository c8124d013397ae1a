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

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "obsh/random.hpp"

namespace obsh {

using BlockId = std::uint64_t;

/// Block ids are 1-based; id 0 marks a dummy block.
inline constexpr BlockId kDummyId = 0;

inline constexpr std::size_t kDefaultBlockSize = 16;
inline constexpr std::size_t kNonceBytes = 12;
inline constexpr std::size_t kIdBytes = 8;
inline constexpr std::size_t kTagBytes = 16;

constexpr std::size_t ciphertext_size(std::size_t block_size)
{
    return kNonceBytes + kIdBytes + block_size + kTagBytes;
}

struct Key {
    static constexpr std::size_t kBits = 128;
    std::array<std::uint8_t, kBits / 8> bytes{};

    std::size_t bits() const { return kBits; }
    bool operator==(const Key&) const = default;
};

/// Deterministic key derivation from a seed (SHA-256, truncated).
Key keygen(std::uint64_t seed);

struct Block {
    BlockId id = kDummyId;
    std::vector<std::uint8_t> payload;

    bool is_dummy() const { return id == kDummyId; }

    /// All-zero dummy payload of the given size.
    static Block dummy(std::size_t block_size) { return Block{kDummyId, std::vector<std::uint8_t>(block_size, 0)}; }

    bool operator==(const Block&) const = default;
};

/// nonce || E(id || payload) || tag. Every ciphertext produced by one Cipher
/// has the same length.
struct Ciphertext {
    std::vector<std::uint8_t> bytes;

    std::span<const std::uint8_t> nonce() const { return std::span(bytes).first(kNonceBytes); }
    std::size_t size() const { return bytes.size(); }

    bool operator==(const Ciphertext&) const = default;
};

enum class CipherMode {
    kAesGcm,
    /// Same byte layout, plaintext body, zero tag, counter nonce. Provides no
    /// secrecy; only for large statistical simulations whose outcome cannot
    /// depend on ciphertext contents.
    kPassthrough,
};

/// AES-128-GCM with a fresh random 96-bit nonce per encryption. The GCM tag is
/// not needed for the shuffles' security; it turns algorithm bugs (wrong key,
/// garbled slot) into CorruptCiphertext instead of silent garbage.
///
/// Holds an OpenSSL context, so one instance must not be used from two
/// threads at once.
class Cipher {
public:
    Cipher(const Key& key, std::size_t block_size = kDefaultBlockSize, CipherMode mode = CipherMode::kAesGcm);
    ~Cipher();
    Cipher(Cipher&&) noexcept;
    Cipher& operator=(Cipher&&) noexcept;
    Cipher(const Cipher&) = delete;
    Cipher& operator=(const Cipher&) = delete;

    std::size_t block_size() const { return block_size_; }
    CipherMode mode() const { return mode_; }
    std::size_t ciphertext_size() const { return obsh::ciphertext_size(block_size_); }

    /// Throws InvalidBlock when the payload is not exactly block_size() bytes.
    Ciphertext encrypt(const Block& block, RandomSource& rng) const;

    /// Writes the ciphertext into out, which must be ciphertext_size() bytes.
    void encrypt_into(const Block& block, RandomSource& rng, std::span<std::uint8_t> out) const;

    /// Encryption of the all-zero dummy block.
    void encrypt_dummy_into(RandomSource& rng, std::span<std::uint8_t> out) const;

    /// Throws CorruptCiphertext on length or authentication failure.
    Block decrypt(std::span<const std::uint8_t> ct) const;
    Block decrypt(const Ciphertext& ct) const { return decrypt(std::span<const std::uint8_t>(ct.bytes)); }

    /// Like decrypt() but reuses out's payload storage.
    void decrypt_into(std::span<const std::uint8_t> ct, Block& out) const;

    /// Allocation-free forms: id and payload travel separately.
    void seal(BlockId id, std::span<const std::uint8_t> payload, RandomSource& rng,
              std::span<std::uint8_t> out) const;
    BlockId open(std::span<const std::uint8_t> ct, std::span<std::uint8_t> payload_out) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::size_t block_size_;
    CipherMode mode_;
};

Ciphertext encrypt(const Key& key, const Block& block, RandomSource& rng,
                   std::size_t block_size = kDefaultBlockSize);
Block decrypt(const Key& key, const Ciphertext& ct, std::size_t block_size = kDefaultBlockSize);

} // namespace obsh
