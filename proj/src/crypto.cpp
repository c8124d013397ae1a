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

#include "obsh/crypto.hpp"

#include <openssl/evp.h>
#include <openssl/sha.h>

#include <cstring>
#include <stdexcept>
#include <string>

#include "obsh/errors.hpp"

namespace obsh {

namespace {

void store_le64(std::uint8_t* p, std::uint64_t v)
{
    for (int i = 0; i < 8; ++i)
        p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t load_le64(const std::uint8_t* p)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}

struct CtxDeleter {
    void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;

} // namespace

Key keygen(std::uint64_t seed)
{
    std::uint8_t in[8];
    store_le64(in, seed);
    std::uint8_t digest[SHA256_DIGEST_LENGTH];
    SHA256(in, sizeof in, digest);
    Key key;
    std::memcpy(key.bytes.data(), digest, key.bytes.size());
    return key;
}

struct Cipher::Impl {
    CtxPtr enc;
    CtxPtr dec;
    // scratch plaintext: id || payload
    mutable std::vector<std::uint8_t> plain;
    mutable std::uint64_t counter = 0;
};

Cipher::Cipher(const Key& key, std::size_t block_size, CipherMode mode)
    : impl_(std::make_unique<Impl>()), block_size_(block_size), mode_(mode)
{
    impl_->plain.resize(kIdBytes + block_size_);
    if (mode_ == CipherMode::kPassthrough)
        return;
    impl_->enc.reset(EVP_CIPHER_CTX_new());
    impl_->dec.reset(EVP_CIPHER_CTX_new());
    if (!impl_->enc || !impl_->dec)
        throw std::runtime_error("EVP_CIPHER_CTX_new failed");
    if (EVP_EncryptInit_ex(impl_->enc.get(), EVP_aes_128_gcm(), nullptr, key.bytes.data(), nullptr) != 1 ||
        EVP_DecryptInit_ex(impl_->dec.get(), EVP_aes_128_gcm(), nullptr, key.bytes.data(), nullptr) != 1)
        throw std::runtime_error("AES-128-GCM initialisation failed");
}

Cipher::~Cipher() = default;
Cipher::Cipher(Cipher&&) noexcept = default;
Cipher& Cipher::operator=(Cipher&&) noexcept = default;

Ciphertext Cipher::encrypt(const Block& block, RandomSource& rng) const
{
    Ciphertext ct;
    ct.bytes.resize(ciphertext_size());
    encrypt_into(block, rng, ct.bytes);
    return ct;
}

void Cipher::encrypt_into(const Block& block, RandomSource& rng, std::span<std::uint8_t> out) const
{
    seal(block.id, block.payload, rng, out);
}

void Cipher::encrypt_dummy_into(RandomSource& rng, std::span<std::uint8_t> out) const
{
    thread_local std::vector<std::uint8_t> zero;
    if (zero.size() != block_size_)
        zero.assign(block_size_, 0);
    seal(kDummyId, zero, rng, out);
}

void Cipher::seal(BlockId id, std::span<const std::uint8_t> payload, RandomSource& rng,
                  std::span<std::uint8_t> out) const
{
    if (payload.size() != block_size_)
        throw InvalidBlock("payload is " + std::to_string(payload.size()) + " bytes, expected " +
                           std::to_string(block_size_));
    if (out.size() != ciphertext_size())
        throw std::invalid_argument("ciphertext buffer has wrong length");

    std::uint8_t* nonce = out.data();
    if (mode_ == CipherMode::kPassthrough) {
        store_le64(nonce, ++impl_->counter);
        std::memset(nonce + 8, 0, kNonceBytes - 8);
        store_le64(out.data() + kNonceBytes, id);
        if (block_size_ > 0)
            std::memcpy(out.data() + kNonceBytes + kIdBytes, payload.data(), block_size_);
        std::memset(out.data() + kNonceBytes + kIdBytes + block_size_, 0, kTagBytes);
        return;
    }
    const std::uint64_t r0 = rng.next();
    const std::uint64_t r1 = rng.next();
    store_le64(nonce, r0);
    std::uint8_t tail[8];
    store_le64(tail, r1);
    std::memcpy(nonce + 8, tail, 4);

    auto& plain = impl_->plain;
    store_le64(plain.data(), id);
    if (block_size_ > 0)
        std::memcpy(plain.data() + kIdBytes, payload.data(), block_size_);

    EVP_CIPHER_CTX* ctx = impl_->enc.get();
    int len = 0;
    std::uint8_t* body = out.data() + kNonceBytes;
    if (EVP_EncryptInit_ex(ctx, nullptr, nullptr, nullptr, nonce) != 1 ||
        EVP_EncryptUpdate(ctx, body, &len, plain.data(), static_cast<int>(plain.size())) != 1 ||
        EVP_EncryptFinal_ex(ctx, body + len, &len) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_GET_TAG, kTagBytes, body + plain.size()) != 1)
        throw std::runtime_error("AES-128-GCM encryption failed");
}

BlockId Cipher::open(std::span<const std::uint8_t> ct, std::span<std::uint8_t> payload_out) const
{
    if (ct.size() != ciphertext_size())
        throw CorruptCiphertext("ciphertext has length " + std::to_string(ct.size()) + ", expected " +
                                std::to_string(ciphertext_size()));
    if (payload_out.size() != block_size_)
        throw std::invalid_argument("payload buffer has wrong length");
    if (mode_ == CipherMode::kPassthrough) {
        if (block_size_ > 0)
            std::memcpy(payload_out.data(), ct.data() + kNonceBytes + kIdBytes, block_size_);
        return load_le64(ct.data() + kNonceBytes);
    }
    auto& plain = impl_->plain;
    const std::uint8_t* nonce = ct.data();
    const std::uint8_t* body = ct.data() + kNonceBytes;
    const std::size_t body_len = kIdBytes + block_size_;
    // EVP wants a mutable tag pointer
    std::uint8_t tag[kTagBytes];
    std::memcpy(tag, body + body_len, kTagBytes);

    EVP_CIPHER_CTX* ctx = impl_->dec.get();
    int len = 0;
    if (EVP_DecryptInit_ex(ctx, nullptr, nullptr, nullptr, nonce) != 1 ||
        EVP_DecryptUpdate(ctx, plain.data(), &len, body, static_cast<int>(body_len)) != 1 ||
        EVP_CIPHER_CTX_ctrl(ctx, EVP_CTRL_GCM_SET_TAG, kTagBytes, tag) != 1)
        throw std::runtime_error("AES-128-GCM decryption setup failed");
    if (EVP_DecryptFinal_ex(ctx, plain.data() + len, &len) != 1)
        throw CorruptCiphertext("ciphertext failed authentication");
    if (block_size_ > 0)
        std::memcpy(payload_out.data(), plain.data() + kIdBytes, block_size_);
    return load_le64(plain.data());
}

void Cipher::decrypt_into(std::span<const std::uint8_t> ct, Block& out) const
{
    out.payload.resize(block_size_);
    out.id = open(ct, out.payload);
}

Block Cipher::decrypt(std::span<const std::uint8_t> ct) const
{
    Block b;
    decrypt_into(ct, b);
    return b;
}

Ciphertext encrypt(const Key& key, const Block& block, RandomSource& rng, std::size_t block_size)
{
    return Cipher(key, block_size).encrypt(block, rng);
}

Block decrypt(const Key& key, const Ciphertext& ct, std::size_t block_size)
{
    return Cipher(key, block_size).decrypt(ct);
}

} // namespace obsh
