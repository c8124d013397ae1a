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

#include "obsh/shuffle_root.hpp"

#include <numeric>
#include <stdexcept>

#include "obsh/spray.hpp"

namespace obsh {

std::uint64_t root_bandwidth(std::size_t n, double epsilon)
{
    const auto shape = detail::root_shape(n, epsilon);
    return 2 * static_cast<std::uint64_t>(n) + 2 * static_cast<std::uint64_t>(shape.rounds) * shape.buckets;
}

Metrics cache_shuffle_root(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                           const RootConfig& cfg, RootTrace* trace)
{
    if (!(cfg.epsilon > 0.0))
        throw std::invalid_argument("epsilon must be positive");
    if (cfg.delta != 0.0 && cfg.delta < default_delta(cfg.epsilon))
        throw std::invalid_argument("delta below (1 + 1/eps) ln(2e)");
    const std::size_t n = pi.size();
    if (sigma.size() != n || pi.real_count() != n || sigma.real_count() != n)
        throw std::invalid_argument("pi and sigma must be permutations of the same size without dummies");
    if (env.store.array_size(io.source) != n || env.store.array_size(io.dest) != n)
        throw std::invalid_argument("Source and Dest must have N slots");

    detail::Workspace ws(env, io.dest, [&sigma](BlockId id) -> std::uint64_t { return sigma.slot_of(id); });
    const auto input = detail::whole_array(io.source, n);
    std::vector<std::uint64_t> dest(n);
    std::iota(dest.begin(), dest.end(), 0);
    auto run = detail::root_into(ws, input, dest, cfg.epsilon, cfg.effective_delta());
    if (trace != nullptr) {
        trace->rounds = run.shape.rounds;
        trace->buckets = run.shape.buckets;
        trace->round_totals = std::move(run.round_totals);
    }
    return env.store.metrics();
}

} // namespace obsh
