// SPDX-License-Identifier: Apache-2.0
//
// Goodness-of-fit statistics: one-sample Kolmogorov-Smirnov with the
// asymptotic Kolmogorov distribution, and Pearson chi-square.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "proxsampler/error.hpp"

namespace proxsampler::verify {

struct GofReport
{
    std::string statistic_name;
    double statistic_value = 0.0;
    double p_value = 1.0;
    std::size_t sample_size = 0;

    bool operator==(const GofReport&) const = default;
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// CDF of N(mean, variance) restricted to [lo, hi].
inline double truncated_normal_cdf(double x, double mean, double variance, double lo, double hi)
{
    if (x <= lo) {
        return 0.0;
    }
    if (x >= hi) {
        return 1.0;
    }
    const double sd = std::sqrt(variance);
    const double a = normal_cdf((lo - mean) / sd);
    const double b = normal_cdf((hi - mean) / sd);
    return (normal_cdf((x - mean) / sd) - a) / (b - a);
}

/// P(K > lambda) for the limiting Kolmogorov distribution.
inline double kolmogorov_survival(double lambda)
{
    if (lambda <= 0.0) {
        return 1.0;
    }
    if (lambda < 1.18) {
        // P(K <= l) = sqrt(2 pi) / l * sum_k exp(-(2k-1)^2 pi^2 / (8 l^2))
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k <= 20; ++k) {
            const double m = 2.0 * k - 1.0;
            cdf += std::exp(-m * m * pi2 / (8.0 * lambda * lambda));
        }
        cdf *= std::sqrt(2.0 * std::numbers::pi) / lambda;
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double sf = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sf += (k % 2 == 1 ? 2.0 : -2.0) * term;
        if (term < 1e-18) {
            break;
        }
    }
    return std::clamp(sf, 0.0, 1.0);
}

/// sup_x |F_n(x) - F(x)| for a continuous reference CDF.
inline double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf)
{
    require(!samples.empty(), "KS statistic needs at least one sample");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double stat = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        stat = std::max({stat, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return stat;
}

inline GofReport ks_test(std::string name, std::vector<double> samples,
                         const std::function<double(double)>& cdf)
{
    const std::size_t n = samples.size();
    const double stat = ks_statistic(std::move(samples), cdf);
    return {std::move(name), stat, kolmogorov_survival(std::sqrt(static_cast<double>(n)) * stat),
            n};
}

/// Pearson chi-square against expected cell probabilities; df = cells - 1.
inline GofReport chi_square_test(std::string name, const std::vector<double>& observed_counts,
                                 const std::vector<double>& expected_probabilities)
{
    require(observed_counts.size() == expected_probabilities.size(),
            "chi-square needs one probability per cell");
    require(observed_counts.size() >= 2, "chi-square needs at least two cells");
    double total = 0.0;
    for (double c : observed_counts) {
        total += c;
    }
    require(total > 0.0, "chi-square needs a non-empty sample");
    double stat = 0.0;
    for (std::size_t i = 0; i < observed_counts.size(); ++i) {
        const double expected = total * expected_probabilities[i];
        require(expected > 0.0, "chi-square cells need positive expected counts");
        const double diff = observed_counts[i] - expected;
        stat += diff * diff / expected;
    }
    const boost::math::chi_squared_distribution<double> dist(
        static_cast<double>(observed_counts.size() - 1));
    const double p = boost::math::cdf(boost::math::complement(dist, stat));
    return {std::move(name), stat, p, static_cast<std::size_t>(total)};
}

}  // namespace proxsampler::verify
