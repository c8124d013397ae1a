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
#include <map>
#include <span>
#include <string>

namespace obsh {

struct ChiSquareResult {
    double statistic = 0.0;
    double dof = 0.0;
    double p_value = 1.0;
    /// Categories after pooling sparse ones.
    std::size_t categories = 0;
};

/// Upper tail P[X >= x] of a chi-square variable with dof degrees of freedom.
double chi_square_sf(double x, double dof);

/// Goodness of fit of observed counts to the given probabilities. Categories
/// with expected count below min_expected are pooled into one.
ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> probabilities,
                               double min_expected = 5.0);

using Histogram = std::map<std::string, std::uint64_t>;

/// Homogeneity test of two samples over the union of their categories
/// (2 x k contingency table), pooling categories whose expected count in
/// either row is below min_expected.
ChiSquareResult chi_square_two_sample(const Histogram& a, const Histogram& b, double min_expected = 5.0);

using Distribution = std::map<std::string, double>;

/// Total variation distance, half the L1 distance.
double total_variation(const Distribution& p, const Distribution& q);

} // namespace obsh
