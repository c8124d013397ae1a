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
#include <span>
#include <vector>

#include "obsh/metrics.hpp"
#include "obsh/shuffle.hpp"

namespace obsh {

struct DummyShuffleConfig {
    std::size_t partition_size = 256; // L
    double epsilon = 0.25;
    /// When positive, rejects L < log_gate * ln N.
    double log_gate = 0.0;
};

/// Derived sizes for N reals among M = N + D slots.
struct DummyShape {
    std::size_t slots = 0;          // M
    double real_fraction = 0.0;     // rho = N / M
    std::size_t partitions = 0;     // ceil(M / L)
    std::size_t points = 0;         // ceil((1 + eps) rho L), polynomial degree + 1
    double max_partition = 0.0;     // (1 + eps) L
};

DummyShape dummy_shape(std::size_t reals, std::size_t slots, const DummyShuffleConfig& cfg);

/// Bandwidth of a non-aborting run: M downloads plus one coefficient block
/// per point and partition.
std::uint64_t dummy_bandwidth(std::size_t reals, std::size_t slots, const DummyShuffleConfig& cfg);

struct DummyReport {
    Metrics metrics;
    DummyShape shape;
    /// Partition of every Dest index.
    std::vector<std::uint32_t> dest_partition;
    /// Pad points placed outside [0, M) because a partition had too few
    /// dummy indices.
    std::size_t outside_pads = 0;
};

/// KCacheShuffleDummy. pi and sigma map M slots, N of them real. `touched`
/// lists Source positions already revealed, real or dummy. Dest must be a
/// lane array. Throws ShuffleAborted on an oversized or overfull partition.
DummyReport k_cache_shuffle_dummy(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                                  std::span<const std::uint64_t> touched, const DummyShuffleConfig& cfg);

} // namespace obsh
