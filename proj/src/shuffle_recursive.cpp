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

#include "obsh/shuffle_recursive.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "obsh/errors.hpp"
#include "obsh/spray.hpp"

namespace obsh {

double level_slack(double epsilon) { return epsilon / (2.0 * (1.0 + epsilon)); }

std::uint64_t RecursiveTrace::bandwidth() const
{
    std::uint64_t total = 0;
    for (const auto& c : calls)
        total += c.bandwidth;
    return total;
}

namespace detail {
namespace {

struct RSprayRun {
    SprayOutput out;
    std::vector<std::vector<std::uint64_t>> parts;
};

// Random grouping, q = S buckets of ceil(n / S) slots, then adjustment.
RSprayRun rspray_into(Workspace& ws, std::span<const SlotRef> input, std::span<const std::uint64_t> dest_set,
                      std::size_t client_blocks, double cache_cap)
{
    const std::size_t q = client_blocks;
    const std::size_t r = ceil_div(input.size(), q);
    RSprayRun run;
    run.parts = random_partition(ws, dest_set, q);
    for (std::size_t j = 0; j < q; ++j)
        if (run.parts[j].size() > r)
            ws.abort("RSpray part " + std::to_string(j + 1) + " has " + std::to_string(run.parts[j].size()) +
                     " destinations for " + std::to_string(r) + " slots");
    SprayParams params;
    params.rounds = r;
    params.buckets = q;
    params.grouping = Grouping::kRandom;
    params.cache_cap = cache_cap;
    params.name = "P";
    run.out = spray(ws, input, params, [&ws](BlockId id) -> std::size_t { return ws.bucket_of_dest[ws.dest_of(id)]; });
    adjust(ws, run.out);
    return run;
}

void recurse(Workspace& ws, std::span<const SlotRef> input, std::span<const std::uint64_t> dest_set,
             const RecursiveConfig& cfg, RecursiveTrace* trace, std::size_t level)
{
    const std::size_t n = input.size();
    const std::size_t d = dest_set.size();
    const std::size_t s = cfg.client_blocks;
    const double delta = cfg.delta > 0.0 ? cfg.delta : default_delta(cfg.epsilon);

    if (d <= s * s) {
        const auto run = root_into(ws, input, dest_set, cfg.epsilon, delta);
        if (trace != nullptr)
            trace->calls.push_back({CallKind::kRoot, level, n, d, run.shape.rounds, run.shape.buckets,
                                    n + 2 * static_cast<std::uint64_t>(run.shape.rounds) * run.shape.buckets + d});
        return;
    }

    std::vector<ArrayId> temps;
    std::vector<std::vector<std::uint64_t>> parts;
    std::size_t r = 0;
    if (level == 0) {
        r = ceil_div(n, s);
        const std::size_t q = ceil_real((1.0 + cfg.epsilon) * static_cast<double>(s));
        parts = random_partition(ws, dest_set, q);
        SprayParams params;
        params.rounds = r;
        params.buckets = q;
        params.grouping = Grouping::kContiguous;
        params.cache_cap = delta * static_cast<double>(q);
        params.name = "T";
        auto out = spray(ws, input, params,
                         [&ws](BlockId id) -> std::size_t { return ws.bucket_of_dest[ws.dest_of(id)]; });
        adjust(ws, out);
        temps = std::move(out.temps);
        if (trace != nullptr)
            trace->calls.push_back({CallKind::kSpray, level, n, d, r, q, n + 3 * static_cast<std::uint64_t>(r) * q});
    } else {
        const double slack = level_slack(cfg.epsilon);
        if (static_cast<double>(d) > (1.0 - slack) * static_cast<double>(n))
            ws.abort("level " + std::to_string(level) + " bucket has " + std::to_string(d) + " destinations for " +
                     std::to_string(n) + " slots, above the (1 - eps') bound");
        const double rdelta = cfg.delta > 0.0 ? cfg.delta : default_delta(slack);
        auto run = rspray_into(ws, input, dest_set, s, rdelta * static_cast<double>(s));
        r = ceil_div(n, s);
        temps = std::move(run.out.temps);
        parts = std::move(run.parts);
        if (trace != nullptr)
            trace->calls.push_back({CallKind::kRSpray, level, n, d, r, s, n + 3 * static_cast<std::uint64_t>(r) * s});
    }

    for (std::size_t j = 0; j < temps.size(); ++j) {
        const auto child = whole_array(temps[j], r);
        recurse(ws, child, parts[j], cfg, trace, level + 1);
        ws.store().release_array(temps[j]);
    }
}

} // namespace

void cache_shuffle_into(Workspace& ws, std::span<const SlotRef> input, std::span<const std::uint64_t> dest_set,
                        const RecursiveConfig& cfg, RecursiveTrace* trace)
{
    recurse(ws, input, dest_set, cfg, trace, 0);
}

} // namespace detail

RSprayResult rspray(ShuffleEnv env, std::span<const SlotRef> input, std::span<const std::uint64_t> dest_set,
                    std::size_t dest_slots, const std::function<std::uint64_t(BlockId)>& dest_of,
                    std::size_t client_blocks, double epsilon)
{
    if (client_blocks == 0)
        throw std::invalid_argument("RSpray needs a positive client budget");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("RSpray slack must lie in (0, 1)");
    if (static_cast<double>(dest_set.size()) > (1.0 - epsilon) * static_cast<double>(input.size()))
        throw std::invalid_argument("RSpray requires d <= (1 - eps) n");
    detail::Workspace ws(env, dest_slots, dest_of);
    auto run = detail::rspray_into(ws, input, dest_set, client_blocks,
                                   default_delta(epsilon) * static_cast<double>(client_blocks));
    return RSprayResult{std::move(run.out.temps), std::move(run.parts)};
}

Metrics cache_shuffle(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                      const RecursiveConfig& cfg, RecursiveTrace* trace)
{
    if (cfg.client_blocks < 2)
        throw std::invalid_argument("CacheShuffle needs S >= 2");
    if (!(cfg.epsilon > 0.0))
        throw std::invalid_argument("epsilon must be positive");
    const std::size_t n = pi.size();
    if (sigma.size() != n || pi.real_count() != n || sigma.real_count() != n)
        throw std::invalid_argument("pi and sigma must be permutations of the same size without dummies");
    if (cfg.log_gate > 0.0 && n > 1 &&
        static_cast<double>(cfg.client_blocks) < cfg.log_gate * std::log(static_cast<double>(n)))
        throw std::invalid_argument("client budget S = " + std::to_string(cfg.client_blocks) + " is below " +
                                    std::to_string(cfg.log_gate) + " ln N");

    detail::Workspace ws(env, io.dest, [&sigma](BlockId id) -> std::uint64_t { return sigma.slot_of(id); });
    const auto input = detail::whole_array(io.source, n);
    std::vector<std::uint64_t> dest(n);
    std::iota(dest.begin(), dest.end(), 0);
    detail::cache_shuffle_into(ws, input, dest, cfg, trace);
    return env.store.metrics();
}

} // namespace obsh
