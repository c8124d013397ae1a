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

#include "obsh/obliv.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <stdexcept>

#include "obsh/stats.hpp"

namespace obsh {

std::uint64_t EnumeratingSource::next()
{
    throw std::logic_error("EnumeratingSource only supports below()");
}

std::uint64_t EnumeratingSource::below(std::uint64_t n)
{
    if (n == 0)
        throw std::invalid_argument("below(0)");
    if (depth_ < path_.size()) {
        if (path_[depth_].arity != n)
            throw std::logic_error("enumerated run is not deterministic in its choices");
        return path_[depth_++].value;
    }
    path_.push_back({0, n});
    ++depth_;
    return 0;
}

bool EnumeratingSource::advance()
{
    path_.resize(depth_);
    while (!path_.empty() && path_.back().value + 1 == path_.back().arity)
        path_.pop_back();
    if (path_.empty())
        return false;
    ++path_.back().value;
    return true;
}

double EnumeratingSource::probability() const
{
    double p = 1.0;
    for (std::size_t i = 0; i < depth_ && i < path_.size(); ++i)
        p /= static_cast<double>(path_[i].arity);
    return p;
}

const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::kPass:
        return "PASS";
    case Verdict::kFail:
        return "FAIL";
    case Verdict::kInconclusive:
        return "INCONCLUSIVE";
    }
    return "?";
}

namespace {

constexpr std::uint64_t kAbortToken = ~std::uint64_t{0};

std::size_t slot_count(const RunSpec& run) { return run.algo == Algo::kDummy ? run.n + run.d : run.n; }

std::string key_of(const TranscriptTokens& tokens)
{
    std::string key;
    key.reserve(tokens.size() * 8);
    for (auto t : tokens)
        key.append(reinterpret_cast<const char*>(&t), sizeof t);
    return key;
}

std::map<BlockId, std::size_t> partial_of(const GameSetup& game)
{
    if (game.touched.size() != game.touched_positions.size())
        throw std::invalid_argument("every touched block needs a revealed position");
    std::map<BlockId, std::size_t> partial;
    for (std::size_t i = 0; i < game.touched.size(); ++i)
        partial[game.touched[i]] = game.touched_positions[i];
    return partial;
}

OblivReport base_report(const RunSpec& run, const char* mode)
{
    OblivReport r;
    r.algorithm = algo_name(run.algo);
    r.n = run.n;
    r.k = run.k;
    r.mode = mode;
    return r;
}

bool too_many_aborts(std::size_t aborted, std::size_t runs) { return aborted * 100 > runs; }

// Returns false when the path budget ran out.
bool enumerate(const RunSpec& run, const GameSetup& game, const PermutationMap& sigma, std::size_t limit,
               Distribution& dist, double& abort_mass, std::size_t& paths)
{
    const auto partial = partial_of(game);
    const std::size_t m = slot_count(run);
    EnumeratingSource src;
    paths = 0;
    do {
        if (paths == limit)
            return false;
        src.begin_path();
        SeededRng nonce_rng(derive_seed(run.seed, 3));
        const auto pi = complete_permutation(partial, m, run.n, src);
        TranscriptTokens tokens;
        RunSpec spec = run;
        spec.verify = false;
        execute(spec, pi, sigma, game.touched, src, nonce_rng, &tokens);
        const double p = src.probability();
        if (!tokens.empty() && tokens.back() == kAbortToken)
            abort_mass += p;
        dist[key_of(tokens)] += p;
        ++paths;
    } while (src.advance());
    return true;
}

OblivReport statistical(const OblivSpec& spec, const GameSetup& game)
{
    const RunSpec& run = spec.run;
    OblivReport rep = base_report(run, "statistical");
    rep.trials = spec.trials;
    const auto partial = partial_of(game);
    const std::size_t m = slot_count(run);
    const std::size_t threads = spec.threads > 0 ? spec.threads : worker_threads();

    std::vector<std::pair<Histogram, Histogram>> per_position;
    Histogram whole[2];
    std::size_t aborted = 0;
    constexpr std::size_t kChunk = 2048;
    std::vector<TranscriptTokens> chunk;
    for (std::size_t base = 0; base < spec.trials; base += kChunk) {
        const std::size_t count = std::min(kChunk, spec.trials - base);
        chunk.assign(2 * count, {});
        parallel_for(2 * count, threads, [&](std::size_t j) {
            const std::size_t trial = base + j / 2;
            const std::size_t b = j % 2;
            const std::uint64_t seed = derive_seed(run.seed, 2 * trial + b);
            SeededRng perm_rng(derive_seed(seed, 1));
            SeededRng rng(derive_seed(seed, 2));
            SeededRng nonce_rng(derive_seed(seed, 3));
            const auto pi = complete_permutation(partial, m, run.n, perm_rng);
            RunSpec one = run;
            one.seed = seed;
            one.verify = false;
            execute(one, pi, b == 0 ? game.sigma0 : game.sigma1, game.touched, rng, nonce_rng, &chunk[j]);
        });
        for (std::size_t j = 0; j < chunk.size(); ++j) {
            const auto& t = chunk[j];
            const std::size_t b = j % 2;
            if (!t.empty() && t.back() == kAbortToken)
                ++aborted;
            if (per_position.size() < t.size())
                per_position.resize(t.size());
            for (std::size_t p = 0; p < t.size(); ++p) {
                auto& h = b == 0 ? per_position[p].first : per_position[p].second;
                ++h[std::to_string(t[p])];
            }
            ++whole[b][key_of(t)];
        }
    }
    // Shorter transcripts contribute an end marker at the missing positions.
    for (auto& [h0, h1] : per_position) {
        std::uint64_t c0 = 0;
        std::uint64_t c1 = 0;
        for (const auto& [k, v] : h0)
            c0 += v;
        for (const auto& [k, v] : h1)
            c1 += v;
        if (c0 < spec.trials)
            h0["END"] += spec.trials - c0;
        if (c1 < spec.trials)
            h1["END"] += spec.trials - c1;
    }

    rep.positions = per_position.size();
    rep.aborted = aborted;
    const double tests = static_cast<double>(per_position.size() + 1);
    double min_p = 1.0;
    std::size_t worst = 0;
    for (std::size_t p = 0; p < per_position.size(); ++p) {
        const auto r = chi_square_two_sample(per_position[p].first, per_position[p].second);
        const double adj = std::min(1.0, r.p_value * tests);
        if (adj < min_p) {
            min_p = adj;
            worst = p;
            rep.statistic = r.statistic;
        }
    }
    const auto w = chi_square_two_sample(whole[0], whole[1]);
    const double wadj = std::min(1.0, w.p_value * tests);
    if (wadj < min_p) {
        min_p = wadj;
        rep.statistic = w.statistic;
        worst = per_position.size();
    }
    rep.p_value = min_p;
    if (too_many_aborts(aborted, 2 * spec.trials)) {
        rep.verdict = Verdict::kInconclusive;
        rep.detail = std::to_string(aborted) + " of " + std::to_string(2 * spec.trials) + " runs aborted";
    } else if (min_p < spec.alpha) {
        rep.verdict = Verdict::kFail;
        rep.detail = worst == per_position.size() ? "whole-transcript distributions differ"
                                                  : "transcript position " + std::to_string(worst) + " differs";
    } else {
        rep.verdict = Verdict::kPass;
        rep.detail = "no position rejects at alpha after Bonferroni over " +
                     std::to_string(per_position.size() + 1) + " tests";
    }
    return rep;
}

} // namespace

GameSetup default_game(const RunSpec& run)
{
    const std::size_t m = slot_count(run);
    std::vector<BlockId> id0(m, kDummyId);
    std::vector<BlockId> id1(m, kDummyId);
    for (std::size_t i = 0; i < run.n; ++i) {
        id0[i] = static_cast<BlockId>(i + 1);
        id1[m - 1 - i] = static_cast<BlockId>(i + 1);
    }
    GameSetup g{PermutationMap(std::move(id0)), PermutationMap(std::move(id1)), {}, {}};
    if (run.algo != Algo::kRoot && run.algo != Algo::kRecursive) {
        const std::size_t k = std::min(run.k, run.n);
        for (std::size_t i = 0; i < k; ++i) {
            g.touched.push_back(static_cast<BlockId>(i + 1));
            g.touched_positions.push_back(i);
        }
    }
    return g;
}

OblivReport obliv_distance(const OblivSpec& spec) { return obliv_distance(spec, default_game(spec.run)); }

OblivReport obliv_distance(const OblivSpec& spec, const GameSetup& game)
{
    validate(spec.run);
    if (spec.allow_exact && slot_count(spec.run) <= 8) {
        Distribution d0;
        Distribution d1;
        double abort0 = 0.0;
        double abort1 = 0.0;
        std::size_t p0 = 0;
        std::size_t p1 = 0;
        if (enumerate(spec.run, game, game.sigma0, spec.exact_path_limit, d0, abort0, p0) &&
            enumerate(spec.run, game, game.sigma1, spec.exact_path_limit, d1, abort1, p1)) {
            OblivReport rep = base_report(spec.run, "exact");
            rep.trials = std::max(p0, p1);
            rep.tv = total_variation(d0, d1);
            rep.statistic = rep.tv;
            rep.p_value = rep.tv < 1e-9 ? 1.0 : 0.0;
            if (std::max(abort0, abort1) > 0.01) {
                rep.verdict = Verdict::kInconclusive;
                rep.detail = "abort probability above 1%";
            } else if (rep.tv < 1e-9) {
                rep.verdict = Verdict::kPass;
                rep.detail = "transcript distributions identical over " + std::to_string(p0) + " + " +
                             std::to_string(p1) + " enumerated paths";
            } else {
                rep.verdict = Verdict::kFail;
                rep.detail = "total variation " + std::to_string(rep.tv);
            }
            return rep;
        }
    }
    return statistical(spec, game);
}

OblivReport same_seed_check(const RunSpec& run, const GameSetup& game, std::size_t pairs)
{
    validate(run);
    OblivReport rep = base_report(run, "same-seed");
    rep.trials = pairs;
    const auto partial = partial_of(game);
    const std::size_t m = slot_count(run);
    std::size_t mismatches = 0;
    for (std::size_t i = 0; i < pairs; ++i) {
        const std::uint64_t seed = derive_seed(run.seed, i);
        TranscriptTokens t[2];
        bool aborted[2] = {false, false};
        for (int b = 0; b < 2; ++b) {
            SeededRng perm_rng(derive_seed(seed, 1));
            SeededRng rng(derive_seed(seed, 2));
            SeededRng nonce_rng(derive_seed(seed, 3));
            const auto pi = complete_permutation(partial, m, run.n, perm_rng);
            RunSpec one = run;
            one.seed = seed;
            const auto res = execute(one, pi, b == 0 ? game.sigma0 : game.sigma1, game.touched, rng, nonce_rng, &t[b]);
            aborted[b] = res.aborted;
            if (!res.aborted && res.misplaced != 0)
                throw std::logic_error("same-seed run misplaced blocks");
        }
        if (aborted[0] || aborted[1])
            ++rep.aborted;
        if (t[0] != t[1])
            ++mismatches;
    }
    rep.statistic = static_cast<double>(mismatches);
    rep.p_value = mismatches == 0 ? 1.0 : 0.0;
    if (too_many_aborts(rep.aborted, pairs)) {
        rep.verdict = Verdict::kInconclusive;
        rep.detail = std::to_string(rep.aborted) + " of " + std::to_string(pairs) + " pairs aborted";
    } else if (mismatches == 0) {
        rep.verdict = Verdict::kPass;
        rep.detail = "all " + std::to_string(pairs) + " transcript pairs identical";
    } else {
        rep.verdict = Verdict::kFail;
        rep.detail = std::to_string(mismatches) + " of " + std::to_string(pairs) + " transcript pairs differ";
    }
    return rep;
}

OblivReport download_order_uniformity(const RunSpec& run, std::size_t trials, double alpha)
{
    if (run.algo != Algo::kBasic && run.algo != Algo::kBasicBroken)
        throw std::invalid_argument("download-order test applies to the basic K-shuffle");
    validate(run);
    OblivReport rep = base_report(run, "uniformity");
    rep.trials = trials;
    const GameSetup game = default_game(run);
    const auto partial = partial_of(game);
    const std::size_t k = game.touched.size();

    std::vector<std::uint64_t> untouched;
    for (std::size_t pos = 0; pos < run.n; ++pos)
        if (std::find(game.touched_positions.begin(), game.touched_positions.end(), pos) ==
            game.touched_positions.end())
            untouched.push_back(pos);
    std::map<std::vector<std::uint64_t>, std::size_t> index;
    {
        auto perm = untouched;
        do {
            index.emplace(perm, index.size());
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    std::vector<std::uint64_t> counts(index.size(), 0);
    std::size_t unexpected = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::uint64_t seed = derive_seed(run.seed, t);
        SeededRng perm_rng(derive_seed(seed, 1));
        SeededRng rng(derive_seed(seed, 2));
        SeededRng nonce_rng(derive_seed(seed, 3));
        const auto pi = complete_permutation(partial, run.n, run.n, perm_rng);
        RunSpec one = run;
        one.seed = seed;
        one.verify = false;
        TranscriptTokens tokens;
        execute(one, pi, game.sigma0, game.touched, rng, nonce_rng, &tokens);
        std::vector<std::uint64_t> order;
        std::size_t downloads = 0;
        for (auto tok : tokens) {
            if ((tok >> 62) != static_cast<std::uint64_t>(EventKind::kDownload))
                continue;
            if (downloads++ >= k)
                order.push_back(tok & ((std::uint64_t{1} << 42) - 1));
        }
        const auto it = index.find(order);
        if (it == index.end())
            ++unexpected;
        else
            ++counts[it->second];
    }
    const std::vector<double> probs(counts.size(), 1.0 / static_cast<double>(counts.size()));
    const auto r = chi_square_gof(counts, probs);
    rep.statistic = r.statistic;
    rep.p_value = unexpected > 0 ? 0.0 : r.p_value;
    rep.positions = counts.size();
    if (unexpected > 0) {
        rep.verdict = Verdict::kFail;
        rep.detail = std::to_string(unexpected) + " runs downloaded something other than an ordering of the "
                     "untouched positions";
    } else if (r.p_value < alpha) {
        rep.verdict = Verdict::kFail;
        rep.detail = "orderings not uniform (chi-square " + std::to_string(r.statistic) + ", dof " +
                     std::to_string(static_cast<int>(r.dof)) + ")";
    } else {
        rep.verdict = Verdict::kPass;
        rep.detail = "uniform over " + std::to_string(counts.size()) + " orderings (dof " +
                     std::to_string(static_cast<int>(r.dof)) + ")";
    }
    return rep;
}

} // namespace obsh
