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

#include "obsh/experiment.hpp"

#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include "obsh/dummy_shuffle.hpp"
#include "obsh/errors.hpp"
#include "obsh/kshuffle.hpp"
#include "obsh/shuffle.hpp"
#include "obsh/shuffle_recursive.hpp"
#include "obsh/shuffle_root.hpp"

namespace obsh {

namespace {

struct AlgoName {
    Algo algo;
    const char* name;
};

constexpr AlgoName kAlgoNames[] = {
    {Algo::kRoot, "root"},   {Algo::kRecursive, "recursive"}, {Algo::kBasic, "basic"},
    {Algo::kBasicBroken, "basic-broken"}, {Algo::kK, "k"}, {Algo::kKRoot, "kroot"},
    {Algo::kDummy, "dummy"},
};

std::uint64_t token(EventKind kind, ArrayId array, std::uint64_t index)
{
    return (static_cast<std::uint64_t>(kind) << 62) | (static_cast<std::uint64_t>(array & 0xFFFFF) << 42) |
           (index & ((std::uint64_t{1} << 42) - 1));
}

TranscriptTokens tokens_of(const MoveTranscript& t)
{
    TranscriptTokens out;
    out.reserve(t.size());
    for (const auto& e : t.events()) {
        if (e.kind != EventKind::kServerEval) {
            out.push_back(token(e.kind, e.array, e.index));
            continue;
        }
        std::uint64_t h = derive_seed(e.coefficient_blocks, e.count);
        for (auto x : t.eval_points(e))
            h = derive_seed(h, x);
        out.push_back(token(e.kind, e.array, h));
    }
    return out;
}

} // namespace

std::optional<Algo> parse_algo(const std::string& name)
{
    for (const auto& a : kAlgoNames)
        if (name == a.name)
            return a.algo;
    return std::nullopt;
}

const char* algo_name(Algo algo)
{
    for (const auto& a : kAlgoNames)
        if (a.algo == algo)
            return a.name;
    return "?";
}

void validate(const RunSpec& spec)
{
    if (spec.n == 0)
        throw std::invalid_argument("--n must be at least 1");
    if (!(spec.epsilon > 0.0))
        throw std::invalid_argument("--epsilon must be positive");
    if (spec.block_size == 0)
        throw std::invalid_argument("block size must be positive");
    switch (spec.algo) {
    case Algo::kRoot:
        break;
    case Algo::kRecursive:
        if (spec.s < 2)
            throw std::invalid_argument("recursive needs --s >= 2");
        break;
    case Algo::kBasic:
    case Algo::kBasicBroken:
        if (spec.k > spec.n)
            throw std::invalid_argument("--k exceeds --n");
        if (spec.batch == 0)
            throw std::invalid_argument("batch must be positive");
        break;
    case Algo::kK:
        if (spec.s < 2)
            throw std::invalid_argument("k needs --s >= 2");
        [[fallthrough]];
    case Algo::kKRoot:
        if (spec.k > spec.n)
            throw std::invalid_argument("--k exceeds --n");
        if (!(spec.epsilon < 1.0))
            throw std::invalid_argument("K-shuffles need --epsilon < 1");
        break;
    case Algo::kDummy:
        if (spec.k > spec.n + spec.d)
            throw std::invalid_argument("--k exceeds --n + --d");
        if (spec.l == 0)
            throw std::invalid_argument("--l must be positive");
        break;
    }
}

double RunResult::max_cache() const
{
    return metrics.spray_rounds > 0 ? static_cast<double>(metrics.queue_max)
                                    : static_cast<double>(metrics.client_high_water);
}

double RunResult::mean_cache() const
{
    return metrics.spray_rounds > 0 ? metrics.queue_mean : metrics.client_mean_held;
}

RunResult execute(const RunSpec& spec, const PermutationMap& pi, const PermutationMap& sigma,
                  std::span<const BlockId> touched, RandomSource& rng, RandomSource& nonce_rng,
                  TranscriptTokens* tokens)
{
    validate(spec);
    const Cipher cipher(keygen(derive_seed(spec.seed, 4)), spec.block_size, spec.cipher_mode);
    SetupOptions opts;
    opts.transcript = tokens != nullptr ? TranscriptMode::kMemory : spec.transcript;
    opts.lane_dest = spec.algo == Algo::kDummy;
    opts.capacity_factor = 0;
    auto setup = make_setup(pi, cipher, nonce_rng, opts);
    ShuffleEnv env{setup.store, cipher, rng, nonce_rng};
    setup.store.stream_to(spec.transcript_stream);
    const std::size_t n = pi.real_count();

    RunResult res;
    const auto start = std::chrono::steady_clock::now();
    try {
        switch (spec.algo) {
        case Algo::kRoot: {
            RootConfig cfg;
            cfg.epsilon = spec.epsilon;
            cfg.delta = spec.delta;
            RootTrace trace;
            res.metrics = cache_shuffle_root(env, setup.io, pi, sigma, cfg, &trace);
            res.extra["rounds"] = static_cast<double>(trace.rounds);
            res.extra["buckets"] = static_cast<double>(trace.buckets);
            break;
        }
        case Algo::kRecursive: {
            RecursiveConfig cfg;
            cfg.client_blocks = spec.s;
            cfg.epsilon = spec.epsilon;
            cfg.delta = spec.delta;
            cfg.log_gate = spec.log_gate;
            RecursiveTrace trace;
            res.metrics = cache_shuffle(env, setup.io, pi, sigma, cfg, &trace);
            res.extra["calls"] = static_cast<double>(trace.calls.size());
            break;
        }
        case Algo::kBasic:
        case Algo::kBasicBroken: {
            BasicOptions o;
            o.batch = spec.batch;
            o.broken = spec.algo == Algo::kBasicBroken;
            res.metrics = k_cache_shuffle_basic(env, setup.io, pi, sigma, TouchedSet({touched.begin(), touched.end()}, n), o);
            break;
        }
        case Algo::kK:
        case Algo::kKRoot: {
            const TouchedSet t({touched.begin(), touched.end()}, n);
            KShuffleReport rep;
            if (spec.algo == Algo::kK) {
                KShuffleConfig cfg;
                cfg.client_blocks = spec.s;
                cfg.epsilon = spec.epsilon;
                cfg.delta = spec.delta;
                cfg.log_gate = spec.log_gate;
                rep = k_cache_shuffle(env, setup.io, pi, sigma, t, cfg);
            } else {
                rep = k_cache_shuffle_root(env, setup.io, pi, sigma, t, spec.epsilon);
            }
            res.metrics = rep.metrics;
            res.extra["buckets"] = static_cast<double>(rep.buckets);
            res.extra["first_unprocessed"] = static_cast<double>(rep.first_unprocessed);
            res.extra["phase3_input"] = static_cast<double>(rep.phase3_input);
            res.extra["phase1_bandwidth"] = static_cast<double>(rep.phase1_bandwidth);
            res.extra["phase2_bandwidth"] = static_cast<double>(rep.phase2_bandwidth);
            res.extra["phase3_bandwidth"] = static_cast<double>(rep.phase3_bandwidth);
            break;
        }
        case Algo::kDummy: {
            std::vector<std::uint64_t> positions;
            positions.reserve(touched.size());
            for (auto id : touched)
                positions.push_back(pi.slot_of(id));
            DummyShuffleConfig cfg;
            cfg.partition_size = spec.l;
            cfg.epsilon = spec.epsilon;
            cfg.log_gate = spec.log_gate;
            const auto rep = k_cache_shuffle_dummy(env, setup.io, pi, sigma, positions, cfg);
            res.metrics = rep.metrics;
            res.extra["partitions"] = static_cast<double>(rep.shape.partitions);
            res.extra["points"] = static_cast<double>(rep.shape.points);
            break;
        }
        }
    } catch (const ShuffleAborted& e) {
        res.aborted = true;
        res.abort_reason = e.what();
        res.metrics = e.metrics();
    }
    res.runtime_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (!res.aborted && spec.verify)
        res.misplaced = spec.algo == Algo::kDummy ? count_misplaced_lanes(setup.store, setup.io.dest, sigma, cipher)
                                                  : count_misplaced(setup.store, setup.io.dest, sigma, cipher);
    if (tokens != nullptr) {
        *tokens = tokens_of(setup.store.transcript());
        if (res.aborted)
            tokens->push_back(~std::uint64_t{0});
    }
    return res;
}

RunResult run_once(const RunSpec& spec)
{
    validate(spec);
    SeededRng perm_rng(derive_seed(spec.seed, 1));
    SeededRng rng(derive_seed(spec.seed, 2));
    SeededRng nonce_rng(derive_seed(spec.seed, 3));
    const std::size_t m = spec.algo == Algo::kDummy ? spec.n + spec.d : spec.n;
    const auto pi = random_permutation(m, spec.n, perm_rng);
    const auto sigma = random_permutation(m, spec.n, perm_rng);
    std::vector<BlockId> touched;
    if (spec.algo != Algo::kRoot && spec.algo != Algo::kRecursive) {
        const std::size_t k = std::min(spec.k, spec.n);
        const auto t = TouchedSet::random(spec.n, k, perm_rng);
        touched.assign(t.ids().begin(), t.ids().end());
    }
    return execute(spec, pi, sigma, touched, rng, nonce_rng);
}

std::size_t worker_threads()
{
    if (const char* env = std::getenv("OBSH_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0)
            return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& fn)
{
    threads = std::max<std::size_t>(1, std::min(threads, count));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count)
                    return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!error)
                        error = std::current_exception();
                    next = count;
                }
            }
        });
    for (auto& th : pool)
        th.join();
    if (error)
        std::rethrow_exception(error);
}

std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec, std::size_t threads)
{
    std::vector<ExperimentRow> rows;
    for (double eps : spec.epsilons)
        for (std::size_t i = 0; i < spec.seeds; ++i) {
            ExperimentRow row;
            row.spec = spec.base;
            row.spec.epsilon = eps;
            row.spec.seed = spec.first_seed + i;
            validate(row.spec);
            rows.push_back(std::move(row));
        }
    parallel_for(rows.size(), threads, [&rows](std::size_t i) { rows[i].result = run_once(rows[i].spec); });
    return rows;
}

void write_csv(std::ostream& out, std::span<const ExperimentRow> rows)
{
    out << kCsvHeader << '\n';
    for (const auto& r : rows) {
        const auto& s = r.spec;
        out << algo_name(s.algo) << ',' << s.n << ',' << s.k << ',' << s.d << ',' << s.s << ',' << s.l << ','
            << s.epsilon << ',' << s.seed << ',' << r.result.metrics.bandwidth_blocks << ',' << r.result.max_cache()
            << ',' << r.result.mean_cache() << ',' << r.result.metrics.roundtrips << ','
            << (r.result.aborted ? 1 : 0) << ',' << r.result.runtime_ms << '\n';
    }
}

} // namespace obsh
