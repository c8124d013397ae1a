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

#include "obsh/field.hpp"

#include <stdexcept>
#include <string>
#include <unordered_set>

namespace obsh {

FieldElement FieldElement::pow(std::uint64_t e) const
{
    FieldElement base = *this;
    FieldElement acc{1};
    while (e != 0) {
        if (e & 1)
            acc *= base;
        base *= base;
        e >>= 1;
    }
    return acc;
}

std::vector<FieldElement> ct_to_lanes(std::span<const std::uint8_t> ct)
{
    constexpr std::uint64_t kMask = (std::uint64_t{1} << kLaneBits) - 1;
    std::vector<FieldElement> lanes;
    lanes.reserve(lane_count(ct.size()));
    __uint128_t acc = 0;
    std::size_t bits = 0;
    for (std::uint8_t byte : ct) {
        acc |= static_cast<__uint128_t>(byte) << bits;
        bits += 8;
        if (bits >= kLaneBits) {
            lanes.emplace_back(static_cast<std::uint64_t>(acc) & kMask);
            acc >>= kLaneBits;
            bits -= kLaneBits;
        }
    }
    if (bits > 0)
        lanes.emplace_back(static_cast<std::uint64_t>(acc) & kMask);
    return lanes;
}

std::vector<std::uint8_t> lanes_to_ct(std::span<const FieldElement> lanes, std::size_t ct_bytes)
{
    if (lanes.size() != lane_count(ct_bytes))
        throw std::invalid_argument("expected " + std::to_string(lane_count(ct_bytes)) + " lanes, got " +
                                    std::to_string(lanes.size()));
    std::vector<std::uint8_t> out;
    out.reserve(ct_bytes);
    __uint128_t acc = 0;
    std::size_t bits = 0;
    for (const FieldElement& lane : lanes) {
        if (lane.value() >> kLaneBits)
            throw std::invalid_argument("lane value exceeds 60 bits");
        acc |= static_cast<__uint128_t>(lane.value()) << bits;
        bits += kLaneBits;
        while (bits >= 8 && out.size() < ct_bytes) {
            out.push_back(static_cast<std::uint8_t>(acc));
            acc >>= 8;
            bits -= 8;
        }
    }
    if (out.size() != ct_bytes || acc != 0)
        throw std::invalid_argument("lanes carry bits beyond the ciphertext length");
    return out;
}

LanePolynomial lagrange_interpolate(std::span<const InterpolationPoint> points)
{
    LanePolynomial poly;
    const std::size_t n = points.size();
    if (n == 0)
        return poly;
    const std::size_t lanes = points.front().y.size();
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(n);
    for (const auto& p : points) {
        if (p.y.size() != lanes)
            throw std::invalid_argument("interpolation points have different lane counts");
        if (!seen.insert(p.x.value()).second)
            throw std::invalid_argument("duplicate interpolation x = " + std::to_string(p.x.value()));
    }

    // master(x) = prod (x - x_k), coefficients low to high, degree n
    std::vector<FieldElement> master(n + 1);
    master[0] = FieldElement{1};
    for (std::size_t k = 0; k < n; ++k) {
        const FieldElement xk = points[k].x;
        for (std::size_t d = k + 1; d > 0; --d)
            master[d] = master[d - 1] - xk * master[d];
        master[0] = -(xk * master[0]);
    }

    // barycentric weights w_k = 1 / prod_{m != k} (x_k - x_m)
    std::vector<FieldElement> weight(n);
    for (std::size_t k = 0; k < n; ++k) {
        FieldElement denom{1};
        for (std::size_t m = 0; m < n; ++m)
            if (m != k)
                denom *= points[k].x - points[m].x;
        weight[k] = denom.inverse();
    }

    poly.lanes.assign(lanes, std::vector<FieldElement>(n));
    std::vector<FieldElement> basis(n);
    for (std::size_t k = 0; k < n; ++k) {
        // basis = master / (x - x_k) by synthetic division
        const FieldElement xk = points[k].x;
        FieldElement carry = master[n];
        for (std::size_t d = n; d > 0; --d) {
            basis[d - 1] = carry;
            carry = master[d - 1] + xk * carry;
        }
        for (std::size_t lane = 0; lane < lanes; ++lane) {
            const FieldElement scale = points[k].y[lane] * weight[k];
            if (scale == FieldElement{})
                continue;
            auto& coeffs = poly.lanes[lane];
            for (std::size_t d = 0; d < n; ++d)
                coeffs[d] += scale * basis[d];
        }
    }
    return poly;
}

void poly_eval_into(const LanePolynomial& poly, FieldElement x, std::span<FieldElement> out)
{
    for (std::size_t lane = 0; lane < poly.lanes.size(); ++lane) {
        const auto& c = poly.lanes[lane];
        FieldElement acc{};
        for (std::size_t d = c.size(); d > 0; --d)
            acc = acc * x + c[d - 1];
        out[lane] = acc;
    }
}

std::vector<FieldElement> poly_eval(const LanePolynomial& poly, FieldElement x)
{
    std::vector<FieldElement> out(poly.lanes.size());
    poly_eval_into(poly, x, out);
    return out;
}

} // namespace obsh
