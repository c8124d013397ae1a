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

// Bandwidth growth in K for the two three-phase shuffles.

#include <cmath>
#include <vector>

#include "doctest.h"
#include "obsh/experiment.hpp"

using namespace obsh;

namespace {

// First completed run from consecutive seeds.
RunResult first_completed(RunSpec r, std::size_t max_seeds)
{
    for (std::size_t i = 0; i < max_seeds; ++i, ++r.seed) {
        auto res = run_once(r);
        if (!res.aborted)
            return res;
    }
    FAIL("no completed run in " << max_seeds << " seeds");
    return {};
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y)
{
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

} // namespace

TEST_CASE("kroot: bandwidth - 2N grows as (4 + eps) K")
{
    const std::size_t n = 100000;
    const double eps = 0.5;
    std::vector<double> ks;
    std::vector<double> extra;
    for (std::size_t k : {1600u, 6400u, 25600u}) {
        RunSpec r;
        r.algo = Algo::kKRoot;
        r.n = n;
        r.k = k;
        r.epsilon = eps;
        r.seed = 1;
        r.cipher_mode = CipherMode::kPassthrough;
        const auto res = first_completed(r, 50);
        CHECK(res.misplaced == 0);
        const double over = static_cast<double>(res.metrics.bandwidth_blocks) - 2.0 * static_cast<double>(n);
        MESSAGE("K=" << k << ": bandwidth - 2N = " << over << " = " << over / static_cast<double>(k)
                     << " K (phase 1 " << res.extra.at("phase1_bandwidth") << ", phase 3 "
                     << res.extra.at("phase3_bandwidth") << ")");
        ks.push_back(static_cast<double>(k));
        extra.push_back(over);
    }
    const double slope = fitted_slope(ks, extra);
    MESSAGE("fitted slope " << slope << " against " << 4.0 + eps);
    CHECK(std::abs(slope - (4.0 + eps)) <= 0.15 * (4.0 + eps));
}

TEST_CASE("k: constant c in 2N + c (1 + eps) K log_S K")
{
    const std::size_t n = 100000;
    const std::size_t s = 64;
    const double eps = 0.5;
    for (std::size_t k : {1000u, 4000u, 16000u}) {
        RunSpec r;
        r.algo = Algo::kK;
        r.n = n;
        r.k = k;
        r.s = s;
        r.epsilon = eps;
        r.seed = 1;
        r.cipher_mode = CipherMode::kPassthrough;
        const auto res = first_completed(r, 50);
        CHECK(res.misplaced == 0);
        const double over = static_cast<double>(res.metrics.bandwidth_blocks) - 2.0 * static_cast<double>(n);
        const double unit = (1.0 + eps) * static_cast<double>(k) * std::log(static_cast<double>(k)) /
                            std::log(static_cast<double>(s));
        MESSAGE("K=" << k << ": c = " << over / unit);
        CHECK(over > 0.0);
    }
}
