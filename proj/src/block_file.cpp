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

#include "obsh/block_file.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "obsh/errors.hpp"

namespace obsh {

namespace {

constexpr char kMagic[4] = {'O', 'B', 'S', 'H'};

template <class T>
T read_le(std::span<const std::uint8_t> bytes, std::size_t at)
{
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
        v |= static_cast<T>(bytes[at + i]) << (8 * i);
    return v;
}

template <class T>
void append_le(std::vector<std::uint8_t>& out, T v)
{
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

} // namespace

BlockFile parse_block_file(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 4)
        throw FormatError("file too short for magic", bytes.size());
    if (std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw FormatError("bad magic, expected OBSH", 0);
    if (bytes.size() < kBlockFileHeader)
        throw FormatError("truncated header", bytes.size());
    const auto version = read_le<std::uint32_t>(bytes, 4);
    if (version != kBlockFileVersion)
        throw FormatError("unsupported version " + std::to_string(version), 4);
    const auto n = read_le<std::uint64_t>(bytes, 8);
    if (n == 0)
        throw FormatError("block count must be at least 1", 8);
    const auto b = read_le<std::uint32_t>(bytes, 16);
    if (b == 0)
        throw FormatError("block size must be positive", 16);
    const std::size_t body = bytes.size() - kBlockFileHeader;
    if (n > body / b)
        throw FormatError("truncated body: " + std::to_string(n) + " blocks of " + std::to_string(b) +
                              " bytes declared",
                          bytes.size());
    if (body != n * b)
        throw FormatError("trailing bytes after the last block", kBlockFileHeader + n * b);

    BlockFile file;
    file.block_size = b;
    file.payloads.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const auto* p = bytes.data() + kBlockFileHeader + i * b;
        file.payloads.emplace_back(p, p + b);
    }
    return file;
}

BlockFile read_block_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_block_file(bytes);
}

std::vector<std::uint8_t> serialize_block_file(const BlockFile& file)
{
    if (file.payloads.empty())
        throw std::invalid_argument("a block file holds at least one block");
    if (file.block_size == 0)
        throw std::invalid_argument("block size must be positive");
    std::vector<std::uint8_t> out(kMagic, kMagic + 4);
    append_le<std::uint32_t>(out, kBlockFileVersion);
    append_le<std::uint64_t>(out, file.payloads.size());
    append_le<std::uint32_t>(out, file.block_size);
    out.reserve(out.size() + file.payloads.size() * file.block_size);
    for (const auto& p : file.payloads) {
        if (p.size() != file.block_size)
            throw std::invalid_argument("payload of " + std::to_string(p.size()) + " bytes in a file of " +
                                        std::to_string(file.block_size) + "-byte blocks");
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

void write_block_file(const std::filesystem::path& path, const BlockFile& file)
{
    const auto bytes = serialize_block_file(file);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw std::runtime_error("write to " + path.string() + " failed");
}

} // namespace obsh
