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
#include <filesystem>
#include <span>
#include <vector>

namespace obsh {

/// Plaintext blocks 1..N in the on-disk exchange format: "OBSH", u32 version
/// 1, u64 N, u32 B, then N payloads of B bytes, integers little-endian.
struct BlockFile {
    std::uint32_t block_size = 0;
    std::vector<std::vector<std::uint8_t>> payloads;

    bool operator==(const BlockFile&) const = default;
};

inline constexpr std::uint32_t kBlockFileVersion = 1;
inline constexpr std::size_t kBlockFileHeader = 20;

/// Throws FormatError (with the offending byte offset) on a bad magic,
/// version, N = 0, B = 0, truncation or trailing bytes.
BlockFile parse_block_file(std::span<const std::uint8_t> bytes);
BlockFile read_block_file(const std::filesystem::path& path);

/// Throws std::invalid_argument on an empty or ragged block list.
std::vector<std::uint8_t> serialize_block_file(const BlockFile& file);
void write_block_file(const std::filesystem::path& path, const BlockFile& file);

} // namespace obsh
