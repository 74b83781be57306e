// SPDX-License-Identifier: Apache-2.0
//
// Goodness-of-fit suite against targets with analytic laws:
//   uniform on a box        coordinates are independent Unif(lo_i, hi_i)
//   uniform on a ball       x_i^2 / R^2 ~ Beta(1/2, (d+1)/2), (|x| / R)^d ~ Unif(0, 1)
//   N(0, s2 I) on a box     coordinates are independent truncated normals
//   N(0, s2 I) on a ball    P(|X| <= r) = P(d/2, r^2/(2 s2)) / P(d/2, R^2/(2 s2))
// Intersections of boxes and balls reduce to one member when that member lies
// inside all the others (the usual shape of a truncated body). Anything else
// reports "no analytic oracle" instead of passing.

#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "proxsampler/geometry.hpp"
#include "proxsampler/sampler.hpp"
#include "proxsampler/verify/stats.hpp"

namespace proxsampler::verify {

using AnalyticShape = std::variant<shape::Box, shape::Ball>;

namespace detail {

inline bool inside(const AnalyticShape& inner, const AnalyticShape& outer)
{
    if (const auto* ob = std::get_if<shape::Ball>(&outer)) {
        if (const auto* ib = std::get_if<shape::Ball>(&inner)) {
            return ib->radius <= ob->radius;
        }
        const auto& box = std::get<shape::Box>(inner);
        return box.lo.cwiseAbs().cwiseMax(box.hi.cwiseAbs()).norm() <= ob->radius;
    }
    const auto& obox = std::get<shape::Box>(outer);
    if (const auto* ib = std::get_if<shape::Ball>(&inner)) {
        return (obox.lo.array() <= -ib->radius).all() && (obox.hi.array() >= ib->radius).all();
    }
    const auto& ibox = std::get<shape::Box>(inner);
    return (obox.lo.array() <= ibox.lo.array()).all() && (obox.hi.array() >= ibox.hi.array()).all();
}

inline bool collect(const BodySpec& body, std::vector<AnalyticShape>& out)
{
    const Shape& s = body.shape();
    if (const auto* b = std::get_if<shape::Ball>(&s)) {
        out.emplace_back(*b);
        return true;
    }
    if (const auto* b = std::get_if<shape::Box>(&s)) {
        out.emplace_back(*b);
        return true;
    }
    if (const auto* in = std::get_if<shape::Intersection>(&s)) {
        for (const auto& m : in->members) {
            if (!collect(m, out)) {
                return false;
            }
        }
        return true;
    }
    return false;
}

}  // namespace detail

/// The single box or ball equal to the body, if there is one.
inline std::optional<AnalyticShape> analytic_shape(const BodySpec& body)
{
    std::vector<AnalyticShape> parts;
    if (!detail::collect(body, parts) || parts.empty()) {
        return std::nullopt;
    }
    for (const auto& candidate : parts) {
        bool smallest = true;
        for (const auto& other : parts) {
            if (!detail::inside(candidate, other)) {
                smallest = false;
                break;
            }
        }
        if (smallest) {
            return candidate;
        }
    }
    return std::nullopt;
}

struct GofSuite
{
    bool supported = false;
    std::string reason;
    std::vector<GofReport> reports;

    /// Bonferroni: every p-value above alpha / (number of tests).
    bool passes(double alpha = 0.01) const
    {
        if (!supported || reports.empty()) {
            return false;
        }
        const double cut = alpha / static_cast<double>(reports.size());
        return std::all_of(reports.begin(), reports.end(),
                           [cut](const GofReport& r) { return r.p_value > cut; });
    }

    double min_p_value() const
    {
        double m = 1.0;
        for (const auto& r : reports) {
            m = std::min(m, r.p_value);
        }
        return m;
    }
};

namespace detail {

inline std::vector<double> coordinate(const std::vector<Vector>& samples, int i)
{
    std::vector<double> c;
    c.reserve(samples.size());
    for (const auto& x : samples) {
        c.push_back(x[i]);
    }
    return c;
}

inline std::vector<double> radii(const std::vector<Vector>& samples)
{
    std::vector<double> r;
    r.reserve(samples.size());
    for (const auto& x : samples) {
        r.push_back(x.norm());
    }
    return r;
}

/// Chi-square over a product grid on the first one or two coordinates, with
/// `bins` equal-probability cells per axis given each axis' quantile function.
template <class Quantile>
GofReport product_chi_square(const std::vector<Vector>& samples, int d, int bins,
                             Quantile quantile)
{
    const int axes = std::min(d, 2);
    std::vector<std::vector<double>> cuts(static_cast<std::size_t>(axes));
    for (int a = 0; a < axes; ++a) {
        for (int k = 1; k < bins; ++k) {
            cuts[static_cast<std::size_t>(a)].push_back(quantile(a, static_cast<double>(k) / bins));
        }
    }
    std::size_t cells = 1;
    for (int a = 0; a < axes; ++a) {
        cells *= static_cast<std::size_t>(bins);
    }
    std::vector<double> counts(cells, 0.0);
    for (const auto& x : samples) {
        std::size_t idx = 0;
        for (int a = 0; a < axes; ++a) {
            const auto& c = cuts[static_cast<std::size_t>(a)];
            const auto k = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), x[a]) - c.begin());
            idx = idx * static_cast<std::size_t>(bins) + k;
        }
        counts[idx] += 1.0;
    }
    return chi_square_test("chi2_grid", counts, std::vector<double>(cells, 1.0 / cells));
}

/// Chi-square over radial shells with equal probability under `radial_cdf`.
template <class Cdf>
GofReport shell_chi_square(const std::vector<double>& r, double R, int shells, Cdf radial_cdf)
{
    std::vector<double> cuts;
    for (int k = 1; k < shells; ++k) {
        const double target = static_cast<double>(k) / shells;
        double lo = 0.0, hi = R;
        for (int it = 0; it < 100; ++it) {
            const double mid = 0.5 * (lo + hi);
            (radial_cdf(mid) < target ? lo : hi) = mid;
        }
        cuts.push_back(0.5 * (lo + hi));
    }
    std::vector<double> counts(static_cast<std::size_t>(shells), 0.0);
    for (double v : r) {
        counts[static_cast<std::size_t>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin())] += 1.0;
    }
    return chi_square_test("chi2_shells", counts,
                           std::vector<double>(static_cast<std::size_t>(shells), 1.0 / shells));
}

inline double invert_cdf(const std::function<double(double)>& cdf, double lo, double hi, double p)
{
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (cdf(mid) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace detail

inline GofSuite gof_suite(const std::vector<Vector>& samples, const TargetSpec& target)
{
    GofSuite suite;
    require(!samples.empty(), "goodness-of-fit needs samples");
    const int d = target.body.dim();
    for (const auto& x : samples) {
        require(x.size() == d, "sample dimension does not match the target");
    }
    const auto analytic = analytic_shape(target.body);
    if (!analytic) {
        suite.reason = "no analytic oracle for this body";
        return suite;
    }
    suite.supported = true;
    const double n = static_cast<double>(samples.size());
    const int grid_bins = std::clamp(static_cast<int>(std::sqrt(n / 5.0)), 2, 5);
    const int shells = std::clamp(static_cast<int>(n / 5.0), 2, 10);
    const bool gaussian = target.kind == TargetKind::truncated_gaussian;
    const double s2 = target.sigma2;

    if (const auto* box = std::get_if<shape::Box>(&*analytic)) {
        auto marginal = [box, gaussian, s2](int i) -> std::function<double(double)> {
            const double lo = box->lo[i], hi = box->hi[i];
            if (gaussian) {
                return [=](double x) { return truncated_normal_cdf(x, 0.0, s2, lo, hi); };
            }
            return [=](double x) { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); };
        };
        for (int i = 0; i < d; ++i) {
            suite.reports.push_back(
                ks_test("ks_coord_" + std::to_string(i), detail::coordinate(samples, i), marginal(i)));
        }
        suite.reports.push_back(detail::product_chi_square(
            samples, d, grid_bins, [&](int axis, double p) {
                return detail::invert_cdf(marginal(axis), box->lo[axis], box->hi[axis], p);
            }));
        return suite;
    }

    const auto& ball = std::get<shape::Ball>(*analytic);
    const double R = ball.radius;
    const double half_d = d / 2.0;
    std::function<double(double)> radial;
    if (gaussian) {
        const double norm = boost::math::gamma_p(half_d, R * R / (2.0 * s2));
        radial = [=](double r) {
            return r <= 0.0 ? 0.0 : r >= R ? 1.0 : boost::math::gamma_p(half_d, r * r / (2.0 * s2)) / norm;
        };
    } else {
        radial = [=](double r) { return r <= 0.0 ? 0.0 : r >= R ? 1.0 : std::pow(r / R, d); };
        const double b = (d + 1) / 2.0;
        auto marginal = [=](double x) {
            if (x <= -R) return 0.0;
            if (x >= R) return 1.0;
            const double tail = 0.5 * boost::math::ibeta(0.5, b, x * x / (R * R));
            return x >= 0.0 ? 0.5 + tail : 0.5 - tail;
        };
        for (int i = 0; i < d; ++i) {
            suite.reports.push_back(
                ks_test("ks_coord_" + std::to_string(i), detail::coordinate(samples, i), marginal));
        }
    }
    const std::vector<double> r = detail::radii(samples);
    suite.reports.push_back(ks_test("ks_radius", r, radial));
    suite.reports.push_back(detail::shell_chi_square(r, R, shells, radial));
    return suite;
}

}  // namespace proxsampler::verify
