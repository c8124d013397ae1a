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

// Reference implementations used only by tests. They share no code with the
// library so that agreement means something.

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace obsh::oracle {

inline constexpr std::uint64_t kP = (std::uint64_t{1} << 61) - 1;

inline std::uint64_t add(std::uint64_t a, std::uint64_t b) { return static_cast<std::uint64_t>((static_cast<__uint128_t>(a) + b) % kP); }
inline std::uint64_t sub(std::uint64_t a, std::uint64_t b) { return add(a, kP - b % kP); }
inline std::uint64_t mul(std::uint64_t a, std::uint64_t b) { return static_cast<std::uint64_t>(static_cast<__uint128_t>(a) * b % kP); }

inline std::uint64_t power(std::uint64_t b, std::uint64_t e)
{
    std::uint64_t r = 1;
    for (; e != 0; e >>= 1, b = mul(b, b))
        if (e & 1)
            r = mul(r, b);
    return r;
}

inline std::uint64_t inv(std::uint64_t a) { return power(a, kP - 2); }

/// sum c_i x^i with explicit powers.
inline std::uint64_t naive_eval(const std::vector<std::uint64_t>& c, std::uint64_t x)
{
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
        total = add(total, mul(c[i], power(x, i)));
    return total;
}

/// Solves V c = y for the Vandermonde matrix of xs by Gauss-Jordan
/// elimination.
inline std::vector<std::uint64_t> vandermonde_solve(const std::vector<std::uint64_t>& xs,
                                                    const std::vector<std::uint64_t>& ys)
{
    const std::size_t n = xs.size();
    std::vector<std::vector<std::uint64_t>> a(n, std::vector<std::uint64_t>(n + 1));
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c)
            a[r][c] = power(xs[r], c);
        a[r][n] = ys[r] % kP;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        while (piv < n && a[piv][col] == 0)
            ++piv;
        if (piv == n)
            throw std::invalid_argument("singular Vandermonde system");
        std::swap(a[piv], a[col]);
        const std::uint64_t s = inv(a[col][col]);
        for (auto& v : a[col])
            v = mul(v, s);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col || a[r][col] == 0)
                continue;
            const std::uint64_t f = a[r][col];
            for (std::size_t c = col; c <= n; ++c)
                a[r][c] = sub(a[r][c], mul(f, a[col][c]));
        }
    }
    std::vector<std::uint64_t> c(n);
    for (std::size_t r = 0; r < n; ++r)
        c[r] = a[r][n];
    return c;
}

} // namespace obsh::oracle
