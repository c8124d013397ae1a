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

#include "obsh/kshuffle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "obsh/errors.hpp"
#include "obsh/shuffle_recursive.hpp"
#include "obsh/shuffle_root.hpp"
#include "obsh/spray.hpp"

namespace obsh {

TouchedSet::TouchedSet(std::vector<BlockId> ids, std::size_t n) : ids_(std::move(ids))
{
    std::sort(ids_.begin(), ids_.end());
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i] == kDummyId || ids_[i] > n)
            throw std::invalid_argument("touched id " + std::to_string(ids_[i]) + " outside [1, " +
                                        std::to_string(n) + "]");
        if (i > 0 && ids_[i] == ids_[i - 1])
            throw std::invalid_argument("touched id " + std::to_string(ids_[i]) + " listed twice");
    }
}

bool TouchedSet::contains(BlockId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }

TouchedSet TouchedSet::random(std::size_t n, std::size_t k, RandomSource& rng)
{
    if (k > n)
        throw std::invalid_argument("cannot touch more blocks than exist");
    std::vector<BlockId> all(n);
    std::iota(all.begin(), all.end(), BlockId{1});
    // partial Fisher-Yates
    for (std::size_t i = 0; i < k; ++i)
        std::swap(all[i], all[i + rng.below(n - i)]);
    all.resize(k);
    return TouchedSet(std::move(all), n);
}

const char* to_string(KPath path)
{
    switch (path) {
    case KPath::kThreePhase:
        return "three-phase";
    case KPath::kBasic:
        return "basic";
    case KPath::kFullShuffle:
        return "full-shuffle";
    }
    return "?";
}

namespace {

void check_permutations(const PermutationMap& pi, const PermutationMap& sigma)
{
    const std::size_t n = pi.size();
    if (sigma.size() != n || pi.real_count() != n || sigma.real_count() != n)
        throw std::invalid_argument("pi and sigma must be permutations of the same size without dummies");
}

} // namespace

Metrics k_cache_shuffle_basic(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                              const TouchedSet& touched, const BasicOptions& options)
{
    check_permutations(pi, sigma);
    const std::size_t n = pi.size();
    if (options.batch == 0)
        throw std::invalid_argument("batch size must be positive");
    for (auto id : touched.ids())
        if (id > n)
            throw std::invalid_argument("touched id outside the permutation");

    ClientOps ops(env);
    ServerStore& store = env.store;
    std::vector<std::uint32_t> handle_of_id(n + 1, detail::kNoEntry);

    if (!options.preloaded.empty()) {
        if (options.preloaded.size() != touched.size())
            throw std::invalid_argument("preloaded blocks must be exactly the touched set");
        store.adopt(options.preloaded.size());
        for (const auto& b : options.preloaded) {
            if (!touched.contains(b.id) || handle_of_id[b.id] != detail::kNoEntry)
                throw std::invalid_argument("preloaded block " + std::to_string(b.id) + " is not a touched block");
            handle_of_id[b.id] = ops.adopt(b.id, b.payload);
        }
    } else if (touched.size() > 0) {
        for (auto id : touched.ids()) {
            auto h = ops.fetch({io.source, pi.slot_of(id)});
            if (!h || ops.slab().id(*h) != id)
                throw ProtocolViolation("Source[" + std::to_string(pi.slot_of(id)) + "] does not hold block " +
                                        std::to_string(id));
            handle_of_id[id] = *h;
        }
        store.flush();
    }

    std::vector<std::size_t> untouched;
    untouched.reserve(n - touched.size());
    for (BlockId id = 1; id <= n; ++id)
        if (handle_of_id[id] == detail::kNoEntry)
            untouched.push_back(id);
    IndexPool tb_down(n + 1, untouched);

    auto download_id = [&](BlockId id) {
        auto h = ops.fetch({io.source, pi.slot_of(id)});
        if (!h || ops.slab().id(*h) != id)
            throw ProtocolViolation("Source[" + std::to_string(pi.slot_of(id)) + "] does not hold block " +
                                    std::to_string(id));
        handle_of_id[id] = *h;
    };

    for (std::size_t begin = 0; begin < n; begin += options.batch) {
        const std::size_t end = std::min(n, begin + options.batch);
        bool downloaded = false;
        for (std::size_t i = begin; i < end; ++i) {
            const BlockId need = sigma.id_at(i);
            if (tb_down.contains(need)) {
                tb_down.erase(need);
                download_id(need);
                downloaded = true;
            } else if (!tb_down.empty() && !options.broken) {
                download_id(static_cast<BlockId>(tb_down.take_random(env.rng)));
                downloaded = true;
            }
        }
        if (downloaded)
            store.flush();
        for (std::size_t i = begin; i < end; ++i) {
            const BlockId need = sigma.id_at(i);
            const auto h = handle_of_id[need];
            if (h == detail::kNoEntry)
                throw ProtocolViolation("block " + std::to_string(need) + " unavailable for Dest[" +
                                        std::to_string(i) + "]");
            handle_of_id[need] = detail::kNoEntry;
            ops.put(h, {io.dest, i});
        }
        store.flush();
    }
    return store.metrics();
}

namespace {

using detail::Workspace;

struct Shape {
    std::size_t buckets;
    std::size_t fanout;
    std::size_t levels;
};

// q = ceil((1 + eps) K / S) buckets; above (1 + eps) S buckets the spray
// runs as a uniform tree, so q is rounded up to fanout^levels.
Shape phase1_shape(std::size_t k, std::size_t s, double eps)
{
    const std::size_t q = std::max<std::size_t>(1, ceil_real((1.0 + eps) * static_cast<double>(k) / static_cast<double>(s)));
    const std::size_t fmax = std::max<std::size_t>(2, ceil_real((1.0 + eps) * static_cast<double>(s)));
    if (q <= fmax)
        return {q, q, 1};
    std::size_t h = 1;
    double reach = static_cast<double>(fmax);
    while (reach < static_cast<double>(q)) {
        reach *= static_cast<double>(fmax);
        ++h;
    }
    auto f = static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(q), 1.0 / static_cast<double>(h))));
    while (f > 2 && std::pow(static_cast<double>(f - 1), static_cast<double>(h)) >= static_cast<double>(q))
        --f;
    std::size_t total = 1;
    for (std::size_t i = 0; i < h; ++i)
        total *= f;
    while (total < q) {
        ++f;
        total = 1;
        for (std::size_t i = 0; i < h; ++i)
            total *= f;
    }
    return {total, f, h};
}

struct TreeContext {
    Workspace& ws;
    const std::vector<std::uint32_t>& dest_bucket;
    std::size_t s;
    std::size_t fanout;
    double delta;
    std::vector<ArrayId>& touch_ct;
};

void spray_tree(TreeContext& ctx, std::span<const SlotRef> input, std::size_t lo, std::size_t span, std::size_t level)
{
    const std::size_t f = ctx.fanout;
    const std::size_t child_span = span / f;
    const std::size_t r = child_span * ctx.s;
    detail::SprayParams params;
    params.rounds = r;
    params.buckets = f;
    params.grouping = level == 0 ? detail::Grouping::kContiguous : detail::Grouping::kRandom;
    params.cache_cap = ctx.delta * static_cast<double>(f);
    params.name = "K";
    auto out = detail::spray(ctx.ws, input, params, [&ctx, lo, child_span](BlockId id) -> std::size_t {
        return (ctx.dest_bucket[ctx.ws.dest_of(id)] - lo) / child_span;
    });
    detail::adjust(ctx.ws, out);
    for (std::size_t c = 0; c < f; ++c) {
        if (child_span == 1) {
            ctx.touch_ct[lo + c] = out.temps[c];
        } else {
            const auto child = detail::whole_array(out.temps[c], r);
            spray_tree(ctx, child, lo + c * child_span, child_span, level + 1);
            ctx.ws.store().release_array(out.temps[c]);
        }
    }
}

KShuffleReport three_phase(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                           const TouchedSet& touched, std::size_t s, double eps, double delta_override,
                           InnerShuffle inner)
{
    const std::size_t n = pi.size();
    const std::size_t k = touched.size();
    ServerStore& store = env.store;
    Workspace ws(env, io.dest, [&sigma](BlockId id) -> std::uint64_t { return sigma.slot_of(id); });
    const double delta = delta_override > 0.0 ? delta_override : default_delta(eps);

    KShuffleReport rep;
    const Shape shape = phase1_shape(k, s, eps);
    const std::size_t q = shape.buckets;
    rep.buckets = q;
    rep.fanout = shape.fanout;
    rep.levels = shape.levels;
    rep.quota_base = floor_real((1.0 - eps) * static_cast<double>(k) / static_cast<double>(q));
    rep.rem_capacity = ceil_real(2.0 * eps * static_cast<double>(k) / static_cast<double>(q));

    // Partition of every Dest index into q buckets.
    rep.dest_bucket.resize(n);
    std::vector<std::vector<std::uint64_t>> dest_ind(q);
    for (std::size_t i = 0; i < n; ++i) {
        const auto b = static_cast<std::uint32_t>(env.rng.below(q));
        rep.dest_bucket[i] = b;
        dest_ind[b].push_back(i);
    }
    rep.touched_per_bucket.assign(q, 0);
    for (auto id : touched.ids())
        ++rep.touched_per_bucket[rep.dest_bucket[sigma.slot_of(id)]];

    // Phase 1: touched blocks into touchCt_1..q of exactly S slots each.
    std::uint64_t mark = store.metrics().bandwidth_blocks;
    std::vector<ArrayId> touch_ct(q);
    {
        std::vector<SlotRef> input;
        input.reserve(k);
        for (auto id : touched.ids())
            input.push_back({io.source, pi.slot_of(id)});
        TreeContext ctx{ws, rep.dest_bucket, s, shape.fanout, delta, touch_ct};
        spray_tree(ctx, input, 0, q, 0);
    }
    rep.phase1_bandwidth = store.metrics().bandwidth_blocks - mark;
    mark = store.metrics().bandwidth_blocks;
    rep.phase2_begin = store.transcript().size();

    // Phase 2
    std::vector<std::vector<BlockId>> pool(q);
    for (std::size_t j = 0; j < q; ++j)
        for (auto i : dest_ind[j]) {
            const BlockId id = sigma.id_at(i);
            if (!touched.contains(id))
                pool[j].push_back(id);
        }
    std::vector<bool> drawn(q, false);
    std::size_t remaining = n - k;
    std::size_t top = q;
    std::vector<ArrayId> rem_arrays;
    auto fetch_id = [&](BlockId id) {
        auto h = ws.ops.fetch({io.source, pi.slot_of(id)});
        if (!h || ws.ops.slab().id(*h) != id)
            throw ProtocolViolation("Source[" + std::to_string(pi.slot_of(id)) + "] does not hold block " +
                                    std::to_string(id));
        return *h;
    };

    std::size_t l = 0;
    for (; l < q; ++l) {
        const std::size_t j = l;
        if (remaining == 0 || drawn[j])
            break;
        const auto dsize = static_cast<std::int64_t>(dest_ind[j].size());
        const std::int64_t quota = dsize - static_cast<std::int64_t>(rep.quota_base);
        const auto needed = static_cast<std::int64_t>(pool[j].size());
        if (needed > quota)
            ws.abort("bucket " + std::to_string(j + 1) + " has " + std::to_string(needed) +
                     " untouched blocks, above its quota of " + std::to_string(quota));

        std::size_t got_touched = 0;
        const std::size_t slots = store.array_size(touch_ct[j]);
        for (std::size_t t = 0; t < slots; ++t) {
            auto h = ws.ops.fetch({touch_ct[j], t});
            if (!h)
                continue;
            ws.handle_of_dest[sigma.slot_of(ws.ops.slab().id(*h))] = *h;
            ++got_touched;
        }
        store.release_array(touch_ct[j]);
        if (got_touched != rep.touched_per_bucket[j])
            throw ProtocolViolation("touched bucket " + std::to_string(j + 1) + " held " +
                                    std::to_string(got_touched) + " blocks, expected " +
                                    std::to_string(rep.touched_per_bucket[j]));

        for (auto i : dest_ind[j]) {
            const BlockId id = sigma.id_at(i);
            if (ws.handle_of_dest[i] == detail::kNoEntry) {
                ws.handle_of_dest[i] = fetch_id(id);
                --remaining;
            }
        }
        pool[j].clear();

        std::vector<BlockSlab::Handle> rem;
        for (std::int64_t t = needed; t < quota && remaining > 0; ++t) {
            while (top > j + 1 && pool[top - 1].empty())
                --top;
            if (top <= j + 1)
                break;
            auto& p = pool[top - 1];
            const auto pick = static_cast<std::size_t>(env.rng.below(p.size()));
            const BlockId id = p[pick];
            p[pick] = p.back();
            p.pop_back();
            drawn[top - 1] = true;
            rem.push_back(fetch_id(id));
            --remaining;
        }
        store.flush();

        for (auto i : dest_ind[j]) {
            const auto h = ws.handle_of_dest[i];
            ws.handle_of_dest[i] = detail::kNoEntry;
            ws.ops.put(h, {io.dest, i});
        }
        if (rem.size() > rep.rem_capacity)
            ws.abort("rem array of bucket " + std::to_string(j + 1) + " needs " + std::to_string(rem.size()) +
                     " slots, capacity " + std::to_string(rep.rem_capacity));
        const ArrayId ra = store.create_array("Rem" + std::to_string(j + 1), rep.rem_capacity);
        for (std::size_t t = 0; t < rep.rem_capacity; ++t) {
            if (t < rem.size())
                ws.ops.put(rem[t], {ra, t});
            else
                ws.ops.put_dummy({ra, t});
        }
        rem_arrays.push_back(ra);
        store.flush();
    }
    rep.first_unprocessed = l;
    rep.phase2_end = store.transcript().size();
    rep.phase2_bandwidth = store.metrics().bandwidth_blocks - mark;
    mark = store.metrics().bandwidth_blocks;

    // Phase 3
    std::vector<SlotRef> input;
    for (auto ra : rem_arrays)
        for (std::size_t t = 0; t < rep.rem_capacity; ++t)
            input.push_back({ra, t});
    for (std::size_t j = l; j < q; ++j)
        for (std::size_t t = 0; t < store.array_size(touch_ct[j]); ++t)
            input.push_back({touch_ct[j], t});
    std::vector<std::uint64_t> leftover_positions;
    for (std::size_t j = l; j < q; ++j)
        for (auto id : pool[j])
            leftover_positions.push_back(pi.slot_of(id));
    std::sort(leftover_positions.begin(), leftover_positions.end());
    for (auto pos : leftover_positions)
        input.push_back({io.source, pos});
    rep.phase3_from_source = leftover_positions.size();
    rep.phase3_input = input.size();

    std::vector<std::uint64_t> dest_set;
    for (std::size_t j = l; j < q; ++j)
        dest_set.insert(dest_set.end(), dest_ind[j].begin(), dest_ind[j].end());
    std::sort(dest_set.begin(), dest_set.end());
    rep.phase3_dest = dest_set.size();

    if (!dest_set.empty()) {
        if (inner == InnerShuffle::kRoot) {
            detail::root_into(ws, input, dest_set, eps, delta);
        } else {
            RecursiveConfig rc;
            rc.client_blocks = s;
            rc.epsilon = eps;
            rc.delta = delta_override;
            detail::cache_shuffle_into(ws, input, dest_set, rc, nullptr);
        }
    }
    for (auto ra : rem_arrays)
        store.release_array(ra);
    for (std::size_t j = l; j < q; ++j)
        store.release_array(touch_ct[j]);
    rep.phase3_bandwidth = store.metrics().bandwidth_blocks - mark;
    rep.metrics = store.metrics();
    return rep;
}

KShuffleReport run_k_shuffle(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                             const TouchedSet& touched, std::size_t s, double eps, double delta, InnerShuffle inner)
{
    const std::size_t n = pi.size();
    const std::size_t k = touched.size();
    KShuffleReport rep;
    if (k == 0) {
        rep.path = KPath::kBasic;
        rep.metrics = k_cache_shuffle_basic(env, io, pi, sigma, touched);
        return rep;
    }
    if (2 * k > n) {
        rep.path = KPath::kFullShuffle;
        if (inner == InnerShuffle::kRoot) {
            RootConfig rc;
            rc.epsilon = eps;
            rc.delta = delta;
            rep.metrics = cache_shuffle_root(env, io, pi, sigma, rc);
        } else {
            RecursiveConfig rc;
            rc.client_blocks = s;
            rc.epsilon = eps;
            rc.delta = delta;
            rep.metrics = cache_shuffle(env, io, pi, sigma, rc);
        }
        return rep;
    }
    return three_phase(env, io, pi, sigma, touched, s, eps, delta, inner);
}

void check_epsilon(double eps)
{
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("epsilon must lie in (0, 1)");
}

} // namespace

KShuffleReport k_cache_shuffle(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi, const PermutationMap& sigma,
                               const TouchedSet& touched, const KShuffleConfig& cfg)
{
    check_permutations(pi, sigma);
    check_epsilon(cfg.epsilon);
    const std::size_t n = pi.size();
    if (cfg.client_blocks < 2)
        throw std::invalid_argument("KCacheShuffle needs S >= 2");
    if (cfg.log_gate > 0.0 && n > 1 &&
        static_cast<double>(cfg.client_blocks) < cfg.log_gate * std::log(static_cast<double>(n)))
        throw std::invalid_argument("client budget S = " + std::to_string(cfg.client_blocks) + " is below " +
                                    std::to_string(cfg.log_gate) + " ln N");
    for (auto id : touched.ids())
        if (id > n)
            throw std::invalid_argument("touched id outside the permutation");
    return run_k_shuffle(env, io, pi, sigma, touched, cfg.client_blocks, cfg.epsilon, cfg.delta, cfg.inner);
}

KShuffleReport k_cache_shuffle_root(ShuffleEnv env, ShuffleIo io, const PermutationMap& pi,
                                    const PermutationMap& sigma, const TouchedSet& touched, double epsilon)
{
    check_permutations(pi, sigma);
    check_epsilon(epsilon);
    for (auto id : touched.ids())
        if (id > pi.size())
            throw std::invalid_argument("touched id outside the permutation");
    const std::size_t s = std::max<std::size_t>(2, ceil_sqrt(touched.size()));
    return run_k_shuffle(env, io, pi, sigma, touched, s, epsilon, 0.0, InnerShuffle::kRoot);
}

} // namespace obsh
