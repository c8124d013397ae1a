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

// Randomized interpolation checks shared by the unit tests and the
// acceptance runner. Each returns the number of failing instances.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "obsh/field.hpp"
#include "obsh/random.hpp"
#include "oracles.hpp"

namespace obsh::checks {

inline std::vector<std::uint64_t> distinct_xs(std::size_t n, RandomSource& rng)
{
    std::vector<std::uint64_t> xs;
    while (xs.size() < n) {
        const std::uint64_t x = rng.below(oracle::kP);
        bool fresh = true;
        for (auto y : xs)
            fresh = fresh && y != x;
        if (fresh)
            xs.push_back(x);
    }
    return xs;
}

/// Lagrange coefficients equal the Vandermonde solution, lane by lane, and
/// the polynomial reproduces every point plus an extra x.
inline std::size_t lagrange_vs_vandermonde(std::size_t instances, std::size_t max_degree, std::size_t lanes,
                                           std::uint64_t seed)
{
    SeededRng rng(seed);
    std::size_t bad = 0;
    for (std::size_t t = 0; t < instances; ++t) {
        const std::size_t n = 1 + rng.below(max_degree + 1);
        const auto xs = distinct_xs(n + 1, rng);
        std::vector<InterpolationPoint> pts(n);
        std::vector<std::vector<std::uint64_t>> ys(lanes, std::vector<std::uint64_t>(n));
        for (std::size_t i = 0; i < n; ++i) {
            pts[i].x = FieldElement{xs[i]};
            for (std::size_t l = 0; l < lanes; ++l) {
                ys[l][i] = rng.below(oracle::kP);
                pts[i].y.emplace_back(ys[l][i]);
            }
        }
        const auto poly = lagrange_interpolate(pts);
        bool ok = poly.lane_count() == lanes && poly.coefficient_count() == n;
        const std::vector<std::uint64_t> pxs(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(n));
        for (std::size_t l = 0; ok && l < lanes; ++l) {
            const auto ref = oracle::vandermonde_solve(pxs, ys[l]);
            for (std::size_t d = 0; d < n; ++d)
                ok = ok && poly.lanes[l][d].value() == ref[d];
            const auto extra = poly_eval(poly, FieldElement{xs[n]});
            ok = ok && extra[l].value() == oracle::naive_eval(ref, xs[n]);
        }
        for (std::size_t i = 0; ok && i < n; ++i) {
            const auto v = poly_eval(poly, pts[i].x);
            for (std::size_t l = 0; l < lanes; ++l)
                ok = ok && v[l] == pts[i].y[l];
        }
        bad += ok ? 0 : 1;
    }
    return bad;
}

/// A random polynomial evaluated at extra points; any deg+1 of them
/// interpolate to the same coefficients.
inline std::size_t subset_uniqueness(std::size_t instances, std::size_t max_degree, std::size_t lanes,
                                     std::uint64_t seed)
{
    SeededRng rng(seed);
    std::size_t bad = 0;
    for (std::size_t t = 0; t < instances; ++t) {
        const std::size_t n = 1 + rng.below(max_degree + 1);
        const std::size_t total = n + 1 + rng.below(n + 1);
        std::vector<std::vector<std::uint64_t>> coeffs(lanes, std::vector<std::uint64_t>(n));
        for (auto& lane : coeffs)
            for (auto& c : lane)
                c = rng.below(oracle::kP);
        const auto xs = distinct_xs(total, rng);

        std::vector<std::size_t> order(total);
        for (std::size_t i = 0; i < total; ++i)
            order[i] = i;
        bool ok = true;
        for (int round = 0; ok && round < 2; ++round) {
            shuffle_in_place<std::size_t>(order, rng);
            std::vector<InterpolationPoint> pts(n);
            for (std::size_t i = 0; i < n; ++i) {
                pts[i].x = FieldElement{xs[order[i]]};
                for (std::size_t l = 0; l < lanes; ++l)
                    pts[i].y.emplace_back(oracle::naive_eval(coeffs[l], xs[order[i]]));
            }
            const auto poly = lagrange_interpolate(pts);
            for (std::size_t l = 0; ok && l < lanes; ++l)
                for (std::size_t d = 0; ok && d < n; ++d)
                    ok = poly.lanes[l][d].value() == coeffs[l][d];
        }
        bad += ok ? 0 : 1;
    }
    return bad;
}

/// ct_to_lanes / lanes_to_ct round trip on random byte strings.
inline std::size_t lanes_round_trip(std::size_t instances, std::size_t ct_bytes, std::uint64_t seed)
{
    SeededRng rng(seed);
    std::size_t bad = 0;
    std::vector<std::uint8_t> ct(ct_bytes);
    for (std::size_t t = 0; t < instances; ++t) {
        for (auto& b : ct)
            b = static_cast<std::uint8_t>(rng.below(256));
        const auto lanes = ct_to_lanes(ct);
        bool ok = lanes.size() == lane_count(ct_bytes);
        for (const auto& v : lanes)
            ok = ok && v.value() < (std::uint64_t{1} << kLaneBits);
        ok = ok && lanes_to_ct(lanes, ct_bytes) == ct;
        bad += ok ? 0 : 1;
    }
    return bad;
}

} // namespace obsh::checks
