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
#include <string>
#include <vector>

#include "obsh/experiment.hpp"
#include "obsh/permutation.hpp"
#include "obsh/random.hpp"

namespace obsh {

/// Walks every sequence of below() answers depth-first. Call begin_path()
/// before each run and advance() after it; probability() is the chance of
/// the current path under uniform choices.
class EnumeratingSource final : public RandomSource {
public:
    std::uint64_t next() override;
    std::uint64_t below(std::uint64_t n) override;

    void begin_path() { depth_ = 0; }
    /// Moves to the next unexplored path; false when all are done.
    bool advance();
    double probability() const;

private:
    struct Choice {
        std::uint64_t value;
        std::uint64_t arity;
    };
    std::vector<Choice> path_;
    std::size_t depth_ = 0;
};

enum class Verdict { kPass, kFail, kInconclusive };

const char* to_string(Verdict v);

struct OblivReport {
    std::string algorithm;
    std::size_t n = 0;
    std::size_t k = 0;
    /// Runs per sigma (statistical) or enumerated paths per sigma (exact).
    std::size_t trials = 0;
    /// "exact", "statistical", "same-seed" or "uniformity".
    std::string mode;
    double statistic = 0.0;
    /// Smallest Bonferroni-adjusted p-value over all tests.
    double p_value = 1.0;
    /// Total variation between the two transcript distributions (exact mode).
    double tv = 0.0;
    std::size_t positions = 0;
    std::size_t aborted = 0;
    Verdict verdict = Verdict::kInconclusive;
    std::string detail;
};

struct OblivSpec {
    /// Algorithm and sizes; seed is the base seed for the trials.
    RunSpec run;
    std::size_t trials = 100000;
    double alpha = 1e-3;
    /// Exact mode is tried for N <= 8 while the path count stays below this.
    std::size_t exact_path_limit = 1 << 20;
    bool allow_exact = true;
    std::size_t threads = 0; // 0: worker_threads()
};

/// The adversary's choice: two target permutations and the touched blocks
/// with their revealed Source positions.
struct GameSetup {
    PermutationMap sigma0;
    PermutationMap sigma1;
    std::vector<BlockId> touched;
    std::vector<std::size_t> touched_positions;
};

/// sigma0 identity, sigma1 its reversal, touched ids 1..K at positions
/// 0..K-1.
GameSetup default_game(const RunSpec& run);

/// Compares the move-transcript distributions under sigma0 and sigma1, pi
/// completed afresh around the revealed positions in every run.
OblivReport obliv_distance(const OblivSpec& spec, const GameSetup& game);
OblivReport obliv_distance(const OblivSpec& spec);

/// Runs both sigmas with identical randomness for `pairs` seeds and requires
/// identical transcripts; meaningful for algorithms whose moves ignore pi.
OblivReport same_seed_check(const RunSpec& run, const GameSetup& game, std::size_t pairs);

/// KCacheShuffleBasic at fixed touched positions: the order of phase-2
/// downloads must be uniform over the (N-K)! orderings of the untouched
/// positions.
OblivReport download_order_uniformity(const RunSpec& run, std::size_t trials, double alpha = 1e-3);

} // namespace obsh
