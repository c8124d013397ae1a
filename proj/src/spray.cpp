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

#include "obsh/spray.hpp"

#include <algorithm>

#include "obsh/errors.hpp"

namespace obsh::detail {

Workspace::Workspace(ShuffleEnv env, ArrayId dest_array, std::function<std::uint64_t(BlockId)> dest_fn)
    : ops(env), dest(dest_array), dest_of(std::move(dest_fn))
{
    const std::size_t m = env.store.array_size(dest_array);
    bucket_of_dest.assign(m, kNoEntry);
    handle_of_dest.assign(m, kNoEntry);
}

Workspace::Workspace(ShuffleEnv env, std::size_t dest_slots, std::function<std::uint64_t(BlockId)> dest_fn)
    : ops(env), dest(0), dest_of(std::move(dest_fn))
{
    bucket_of_dest.assign(dest_slots, kNoEntry);
    handle_of_dest.assign(dest_slots, kNoEntry);
}

std::string Workspace::next_name(const char* prefix) { return std::string(prefix) + std::to_string(arrays_created++); }

void Workspace::abort(const std::string& reason) { throw ShuffleAborted(reason, store().metrics()); }

std::vector<SlotRef> whole_array(ArrayId array, std::size_t slots)
{
    std::vector<SlotRef> refs(slots);
    for (std::size_t i = 0; i < slots; ++i)
        refs[i] = SlotRef{array, i};
    return refs;
}

namespace {

void note_round(Metrics& m, std::uint64_t total)
{
    ++m.spray_rounds;
    m.queue_max = std::max(m.queue_max, total);
    m.queue_mean += (static_cast<double>(total) - m.queue_mean) / static_cast<double>(m.spray_rounds);
}

} // namespace

SprayOutput spray(Workspace& ws, std::span<const SlotRef> input, const SprayParams& params,
                  const std::function<std::size_t(BlockId)>& bucket_of)
{
    const std::size_t r = params.rounds;
    const std::size_t q = params.buckets;
    SprayOutput out;
    out.queues.resize(q);
    out.temps.reserve(q);
    for (std::size_t j = 0; j < q; ++j)
        out.temps.push_back(ws.store().create_array(ws.next_name(params.name), r));

    // Round membership as offsets into `order`.
    std::vector<std::size_t> start(r + 1, 0);
    std::vector<std::uint32_t> order(input.size());
    if (params.grouping == Grouping::kContiguous) {
        const std::size_t g = r == 0 ? 0 : ceil_div(input.size(), r);
        for (std::size_t i = 0; i <= r; ++i)
            start[i] = std::min(i * g, input.size());
        for (std::size_t k = 0; k < input.size(); ++k)
            order[k] = static_cast<std::uint32_t>(k);
    } else {
        std::vector<std::uint32_t> round_of(input.size());
        for (std::size_t k = 0; k < input.size(); ++k) {
            round_of[k] = static_cast<std::uint32_t>(ws.rng().below(r));
            ++start[round_of[k] + 1];
        }
        for (std::size_t i = 0; i < r; ++i)
            start[i + 1] += start[i];
        std::vector<std::size_t> fill(start.begin(), start.end() - 1);
        for (std::size_t k = 0; k < input.size(); ++k)
            order[fill[round_of[k]]++] = static_cast<std::uint32_t>(k);
    }

    std::uint64_t total = 0;
    auto& metrics = ws.store().mutable_metrics();
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t k = start[i]; k < start[i + 1]; ++k) {
            auto h = ws.ops.fetch(input[order[k]]);
            if (!h)
                continue;
            out.queues[bucket_of(ws.ops.slab().id(*h))].push_back(*h);
            ++total;
        }
        for (std::size_t j = 0; j < q; ++j) {
            auto& queue = out.queues[j];
            if (queue.empty()) {
                ws.ops.put_dummy({out.temps[j], i});
            } else {
                ws.ops.put(queue.front(), {out.temps[j], i});
                queue.pop_front();
                --total;
            }
        }
        out.round_totals.push_back(total);
        note_round(metrics, total);
        if (static_cast<double>(total) > params.cache_cap)
            ws.abort("client cache overflow: " + std::to_string(total) + " queued blocks after spray round " +
                     std::to_string(i + 1) + " exceeds cap " + std::to_string(params.cache_cap));
    }
    return out;
}

void adjust(Workspace& ws, SprayOutput& out)
{
    for (std::size_t j = 0; j < out.temps.size(); ++j) {
        const ArrayId temp = out.temps[j];
        auto& queue = out.queues[j];
        const std::size_t slots = ws.store().array_size(temp);
        for (std::size_t i = 0; i < slots; ++i) {
            auto h = ws.ops.fetch({temp, i});
            if (h) {
                ws.ops.put(*h, {temp, i});
            } else if (!queue.empty()) {
                ws.ops.put(queue.front(), {temp, i});
                queue.pop_front();
            } else {
                ws.ops.put_dummy({temp, i});
            }
        }
        if (!queue.empty())
            ws.abort("adjustment left " + std::to_string(queue.size()) + " blocks in queue " + std::to_string(j + 1));
    }
}

RootShape root_shape(std::size_t n, double epsilon)
{
    RootShape shape{};
    shape.rounds = std::max<std::size_t>(1, ceil_sqrt(n));
    shape.group = ceil_div(n, shape.rounds);
    shape.buckets = std::max<std::size_t>(1, ceil_real((1.0 + epsilon / 2.0) * std::sqrt(static_cast<double>(n))));
    return shape;
}

std::vector<std::vector<std::uint64_t>> random_partition(Workspace& ws, std::span<const std::uint64_t> dest_set,
                                                         std::size_t buckets)
{
    std::vector<std::vector<std::uint64_t>> parts(buckets);
    for (auto d : dest_set) {
        const auto b = static_cast<std::uint32_t>(ws.rng().below(buckets));
        ws.bucket_of_dest[d] = b;
        parts[b].push_back(d);
    }
    return parts;
}

RootRun root_into(Workspace& ws, std::span<const SlotRef> input, std::span<const std::uint64_t> dest_set,
                  double epsilon, double delta)
{
    RootRun run{root_shape(input.size(), epsilon), {}};
    const RootShape& shape = run.shape;
    auto parts = random_partition(ws, dest_set, shape.buckets);

    SprayParams params;
    params.rounds = shape.rounds;
    params.buckets = shape.buckets;
    params.grouping = Grouping::kContiguous;
    params.cache_cap = delta * static_cast<double>(shape.buckets);
    params.name = "R";
    auto bucket_of = [&ws](BlockId id) -> std::size_t {
        const std::uint32_t b = ws.bucket_of_dest[ws.dest_of(id)];
        if (b == kNoEntry)
            throw ProtocolViolation("block " + std::to_string(id) + " has no destination in this call");
        return b;
    };
    SprayOutput out = spray(ws, input, params, bucket_of);
    run.round_totals = out.round_totals;

    // Recalibrate
    for (std::size_t j = 0; j < shape.buckets; ++j) {
        std::size_t held = 0;
        for (std::size_t i = 0; i < shape.rounds; ++i) {
            auto h = ws.ops.fetch({out.temps[j], i});
            if (!h)
                continue;
            ws.handle_of_dest[ws.dest_of(ws.ops.slab().id(*h))] = *h;
            ++held;
        }
        for (auto h : out.queues[j]) {
            ws.handle_of_dest[ws.dest_of(ws.ops.slab().id(h))] = h;
            ++held;
        }
        out.queues[j].clear();
        if (held != parts[j].size())
            throw ProtocolViolation("bucket " + std::to_string(j + 1) + " holds " + std::to_string(held) +
                                    " blocks for " + std::to_string(parts[j].size()) + " destinations");
        for (auto d : parts[j]) {
            const std::uint32_t h = ws.handle_of_dest[d];
            if (h == kNoEntry)
                throw ProtocolViolation("block for Dest[" + std::to_string(d) + "] missing at recalibration");
            ws.handle_of_dest[d] = kNoEntry;
            ws.ops.put(h, {ws.dest, d});
        }
        ws.store().release_array(out.temps[j]);
    }
    for (auto d : dest_set)
        ws.bucket_of_dest[d] = kNoEntry;
    return run;
}

} // namespace obsh::detail
