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

#include "obsh/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace obsh {

double chi_square_sf(double x, double dof)
{
    if (dof <= 0.0)
        return 1.0;
    if (x <= 0.0)
        return 1.0;
    const boost::math::chi_squared_distribution<double> dist(dof);
    return boost::math::cdf(boost::math::complement(dist, x));
}

ChiSquareResult chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> probabilities,
                               double min_expected)
{
    if (observed.size() != probabilities.size())
        throw std::invalid_argument("observed and expected category counts differ");
    std::uint64_t total = 0;
    for (auto o : observed)
        total += o;
    ChiSquareResult r;
    if (total == 0)
        return r;
    double pooled_obs = 0.0;
    double pooled_exp = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double e = probabilities[i] * static_cast<double>(total);
        const auto o = static_cast<double>(observed[i]);
        if (e < min_expected) {
            pooled_obs += o;
            pooled_exp += e;
            continue;
        }
        r.statistic += (o - e) * (o - e) / e;
        ++r.categories;
    }
    if (pooled_exp > 0.0) {
        r.statistic += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
        ++r.categories;
    } else if (pooled_obs > 0.0) {
        // mass where none was expected
        r.statistic = INFINITY;
        r.p_value = 0.0;
        r.dof = static_cast<double>(r.categories);
        return r;
    }
    r.dof = r.categories > 0 ? static_cast<double>(r.categories - 1) : 0.0;
    r.p_value = std::isinf(r.statistic) ? 0.0 : chi_square_sf(r.statistic, r.dof);
    return r;
}

ChiSquareResult chi_square_two_sample(const Histogram& a, const Histogram& b, double min_expected)
{
    std::uint64_t na = 0;
    std::uint64_t nb = 0;
    for (const auto& [k, v] : a)
        na += v;
    for (const auto& [k, v] : b)
        nb += v;
    ChiSquareResult r;
    if (na == 0 || nb == 0)
        return r;
    const double total = static_cast<double>(na + nb);
    const double fa = static_cast<double>(na) / total;
    const double fb = static_cast<double>(nb) / total;

    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> joint;
    for (const auto& [k, v] : a)
        joint[k].first += v;
    for (const auto& [k, v] : b)
        joint[k].second += v;

    std::vector<std::pair<double, double>> cells;
    double pool_a = 0.0;
    double pool_b = 0.0;
    for (const auto& [k, c] : joint) {
        const double col = static_cast<double>(c.first + c.second);
        if (col * std::min(fa, fb) < min_expected) {
            pool_a += static_cast<double>(c.first);
            pool_b += static_cast<double>(c.second);
            continue;
        }
        cells.emplace_back(static_cast<double>(c.first), static_cast<double>(c.second));
    }
    if (pool_a + pool_b > 0.0)
        cells.emplace_back(pool_a, pool_b);
    for (const auto& [oa, ob] : cells) {
        const double col = oa + ob;
        const double ea = col * fa;
        const double eb = col * fb;
        r.statistic += (oa - ea) * (oa - ea) / ea + (ob - eb) * (ob - eb) / eb;
    }
    r.categories = cells.size();
    r.dof = r.categories > 0 ? static_cast<double>(r.categories - 1) : 0.0;
    r.p_value = chi_square_sf(r.statistic, r.dof);
    return r;
}

double total_variation(const Distribution& p, const Distribution& q)
{
    double sum = 0.0;
    auto it = p.begin();
    auto jt = q.begin();
    while (it != p.end() || jt != q.end()) {
        if (jt == q.end() || (it != p.end() && it->first < jt->first)) {
            sum += std::fabs(it->second);
            ++it;
        } else if (it == p.end() || jt->first < it->first) {
            sum += std::fabs(jt->second);
            ++jt;
        } else {
            sum += std::fabs(it->second - jt->second);
            ++it;
            ++jt;
        }
    }
    return sum / 2.0;
}

} // namespace obsh
