// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <set>
#include <vector>

#include "proxsampler/annealing.hpp"
#include "proxsampler/error.hpp"

namespace proxsampler::verify {

struct ScalingPoint
{
    int d = 0;
    double queries = 0.0;
    double wall_seconds = 0.0;
};

struct ScalingFit
{
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

/// Least squares of log(queries) on log(d). The slope is the empirical
/// exponent of the query count in the dimension.
inline ScalingFit query_scaling_fit(const std::vector<ScalingPoint>& points)
{
    std::set<int> dims;
    for (const auto& p : points) {
        require(p.d >= 1 && p.queries > 0.0, "scaling points need d >= 1 and positive queries");
        dims.insert(p.d);
    }
    require(dims.size() >= 4, "scaling fit needs at least 4 distinct dimensions");

    const double n = static_cast<double>(points.size());
    double sx = 0.0, sy = 0.0;
    for (const auto& p : points) {
        sx += std::log(static_cast<double>(p.d));
        sy += std::log(p.queries);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const auto& p : points) {
        const double dx = std::log(static_cast<double>(p.d)) - mx;
        const double dy = std::log(p.queries) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    ScalingFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

inline ScalingFit query_scaling_fit(const std::vector<CoolingReport>& reports)
{
    std::vector<ScalingPoint> points;
    for (const auto& r : reports) {
        require(r.schedule.truncated_body.has_value(), "cooling report lacks its body");
        points.push_back({r.schedule.truncated_body->dim(), static_cast<double>(r.total_queries),
                          r.wall_seconds});
    }
    return query_scaling_fit(points);
}

}  // namespace proxsampler::verify
