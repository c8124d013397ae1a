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
#include <vector>

namespace obsh {

/// Element of GF(p), p = 2^61 - 1.
class FieldElement {
public:
    static constexpr std::uint64_t kPrime = (std::uint64_t{1} << 61) - 1;

    constexpr FieldElement() = default;
    /// Reduces v modulo p.
    constexpr FieldElement(std::uint64_t v) : v_(reduce64(v)) {} // NOLINT(google-explicit-constructor)

    constexpr std::uint64_t value() const { return v_; }

    friend constexpr FieldElement operator+(FieldElement a, FieldElement b)
    {
        std::uint64_t s = a.v_ + b.v_;
        if (s >= kPrime)
            s -= kPrime;
        return raw(s);
    }
    friend constexpr FieldElement operator-(FieldElement a, FieldElement b)
    {
        return raw(a.v_ >= b.v_ ? a.v_ - b.v_ : a.v_ + kPrime - b.v_);
    }
    friend constexpr FieldElement operator-(FieldElement a) { return raw(a.v_ == 0 ? 0 : kPrime - a.v_); }
    friend constexpr FieldElement operator*(FieldElement a, FieldElement b)
    {
        const __uint128_t m = static_cast<__uint128_t>(a.v_) * b.v_;
        std::uint64_t lo = static_cast<std::uint64_t>(m) & kPrime;
        std::uint64_t hi = static_cast<std::uint64_t>(m >> 61);
        std::uint64_t s = lo + hi;
        if (s >= kPrime)
            s -= kPrime;
        return raw(s);
    }
    FieldElement& operator+=(FieldElement o) { return *this = *this + o; }
    FieldElement& operator-=(FieldElement o) { return *this = *this - o; }
    FieldElement& operator*=(FieldElement o) { return *this = *this * o; }

    constexpr bool operator==(const FieldElement&) const = default;

    FieldElement pow(std::uint64_t e) const;
    /// Multiplicative inverse; the inverse of zero is reported as zero.
    FieldElement inverse() const { return pow(kPrime - 2); }

private:
    static constexpr FieldElement raw(std::uint64_t v)
    {
        FieldElement f;
        f.v_ = v;
        return f;
    }
    static constexpr std::uint64_t reduce64(std::uint64_t v)
    {
        std::uint64_t s = (v & kPrime) + (v >> 61);
        return s >= kPrime ? s - kPrime : s;
    }

    std::uint64_t v_ = 0;
};

inline constexpr std::size_t kLaneBits = 60;

/// Number of 60-bit lanes needed for a ciphertext of ct_bytes bytes.
constexpr std::size_t lane_count(std::size_t ct_bytes) { return (8 * ct_bytes + kLaneBits - 1) / kLaneBits; }

/// Little-endian bit packing of the bytes into 60-bit lanes.
std::vector<FieldElement> ct_to_lanes(std::span<const std::uint8_t> ct);

/// Inverse of ct_to_lanes for a ciphertext of ct_bytes bytes. Throws
/// std::invalid_argument if the lanes do not encode such a ciphertext.
std::vector<std::uint8_t> lanes_to_ct(std::span<const FieldElement> lanes, std::size_t ct_bytes);

/// One coefficient vector per lane, all of the same length, lowest degree
/// first.
struct LanePolynomial {
    std::vector<std::vector<FieldElement>> lanes;

    std::size_t lane_count() const { return lanes.size(); }
    std::size_t coefficient_count() const { return lanes.empty() ? 0 : lanes.front().size(); }
    std::size_t degree() const { return coefficient_count() == 0 ? 0 : coefficient_count() - 1; }
    /// Bandwidth of shipping this polynomial, in block units.
    std::size_t coefficient_blocks() const { return coefficient_count(); }

    bool operator==(const LanePolynomial&) const = default;
};

struct InterpolationPoint {
    FieldElement x;
    std::vector<FieldElement> y;
};

/// The unique polynomial of degree < points.size() through every point,
/// lane by lane. Throws std::invalid_argument on duplicate x or ragged y.
LanePolynomial lagrange_interpolate(std::span<const InterpolationPoint> points);

/// Horner evaluation of every lane at x.
std::vector<FieldElement> poly_eval(const LanePolynomial& poly, FieldElement x);

/// Same as poly_eval, writing into out (sized lane_count()).
void poly_eval_into(const LanePolynomial& poly, FieldElement x, std::span<FieldElement> out);

} // namespace obsh
