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

#include <cstdint>

namespace obsh {

/// Cost counters of one execution. All block quantities are in units of one
/// ciphertext block.
struct Metrics {
    std::uint64_t bandwidth_blocks = 0;
    std::uint64_t downloads = 0;
    std::uint64_t uploads = 0;
    std::uint64_t eval_coefficient_blocks = 0;
    std::uint64_t client_high_water = 0;
    /// Blocks held by the client, averaged over all download and upload
    /// moves.
    double client_mean_held = 0.0;
    std::uint64_t roundtrips = 0;
    bool aborted = false;

    // Spray-phase cache occupancy, sum over all queues sampled after every
    // spray round. Zero when the algorithm has no spray phase.
    std::uint64_t queue_max = 0;
    double queue_mean = 0.0;
    std::uint64_t spray_rounds = 0;

    bool operator==(const Metrics&) const = default;
};

} // namespace obsh
