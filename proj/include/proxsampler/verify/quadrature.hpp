// SPDX-License-Identifier: Apache-2.0
//
// Deterministic integration over a convex body in d <= 2.
//
// For d = 2 the body is sliced along the first axis. At each outer node x1 the
// chord {t : (x1, t) in K} is found from the membership predicate by a scan
// followed by bisection (convexity makes every slice an interval). The inner
// integral over a chord is closed form for both weights used here: 1 and
// exp(-|x|^2 / (2 s2)). Outer integrals use composite 10-point Gauss-Legendre.
// Chords do not depend on the weight, so a ChordTable is built once per body
// and reused across every variance of a cooling schedule.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "proxsampler/error.hpp"
#include "proxsampler/geometry.hpp"
#include "proxsampler/verify/grid.hpp"

namespace proxsampler::verify {

/// Integrand weight: 1 (uniform) or exp(-|x|^2 / (2 sigma2)).
struct Weight
{
    std::optional<double> sigma2;

    static Weight uniform() { return {}; }
    static Weight gaussian(double s2) { return {s2}; }

    double at(double r2) const { return sigma2 ? std::exp(-r2 / (2.0 * *sigma2)) : 1.0; }

    /// integral_a^b of the 1-d factor.
    double segment(double a, double b) const
    {
        if (!(b > a)) {
            return 0.0;
        }
        if (!sigma2) {
            return b - a;
        }
        const double s = std::sqrt(*sigma2);
        const double k = s * std::sqrt(std::numbers::pi / 2.0);
        // erfc form keeps precision when both ends sit in the same tail.
        if (a >= 0.0) {
            return k * (std::erfc(a / (s * std::numbers::sqrt2)) - std::erfc(b / (s * std::numbers::sqrt2)));
        }
        if (b <= 0.0) {
            return k * (std::erfc(-b / (s * std::numbers::sqrt2)) - std::erfc(-a / (s * std::numbers::sqrt2)));
        }
        return k * (std::erf(b / (s * std::numbers::sqrt2)) - std::erf(a / (s * std::numbers::sqrt2)));
    }
};

struct Interval
{
    double lo = 0.0;
    double hi = -1.0;
    bool empty() const { return !(hi >= lo); }
};

/// {t : base + t * dir in K} for a unit axis direction, or empty.
inline Interval axis_chord(const BodySpec& body, Vector base, int axis, int scan_points = 512)
{
    const double reach = body.circumscribed_radius() * (1.0 + 1e-9) + 1e-300;
    auto inside = [&](double t) {
        base[axis] = t;
        return body.holds(base);
    };
    std::optional<double> seed;
    if (inside(0.0)) {
        seed = 0.0;
    } else {
        for (int k = 0; k <= scan_points && !seed; ++k) {
            const double t = -reach + 2.0 * reach * k / scan_points;
            if (inside(t)) {
                seed = t;
            }
        }
    }
    if (!seed) {
        return {};
    }
    auto edge = [&](double in, double out) {
        for (int it = 0; it < 200 && std::abs(out - in) > 1e-15 * reach; ++it) {
            const double mid = 0.5 * (in + out);
            (inside(mid) ? in : out) = mid;
        }
        return in;
    };
    return {edge(*seed, -reach), edge(*seed, reach)};
}

/// Projection of a planar body onto axis 0, found by bisection on whether
/// the chord along axis 1 is empty. Tips thinner than the chord scan
/// spacing are clipped.
inline Interval axis_extent(const BodySpec& body)
{
    require(body.dim() == 2, "axis_extent is for d = 2");
    const double reach = body.circumscribed_radius() * (1.0 + 1e-9) + 1e-300;
    auto inside = [&](double t) { return !axis_chord(body, Eigen::Vector2d(t, 0.0), 1).empty(); };
    std::optional<double> seed;
    for (int k = 0; k <= 512 && !seed; ++k) {
        const double t = k == 0 ? 0.0 : -reach + 2.0 * reach * (k - 1) / 511;
        if (inside(t)) {
            seed = t;
        }
    }
    if (!seed) {
        return {};
    }
    auto edge = [&](double in, double out) {
        for (int it = 0; it < 100 && std::abs(out - in) > 1e-15 * reach; ++it) {
            const double mid = 0.5 * (in + out);
            (inside(mid) ? in : out) = mid;
        }
        return in;
    };
    return {edge(*seed, -reach), edge(*seed, reach)};
}

struct ChordTable
{
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<Interval> chords;
};

/// Composite Gauss-Legendre nodes over each [breaks[k], breaks[k+1]] split
/// into `panels` panels, with the body's chord along axis 1 at each node.
inline ChordTable build_chord_table(const BodySpec& body, const std::vector<double>& breaks,
                                    int panels)
{
    require(body.dim() == 2, "chord tables are for d = 2");
    using gl = boost::math::quadrature::gauss<double, 10>;
    const auto& abscissa = gl::abscissa();
    const auto& gl_weights = gl::weights();
    ChordTable table;
    Vector base = Vector::Zero(2);
    for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
        const double width = (breaks[k + 1] - breaks[k]) / panels;
        for (int p = 0; p < panels; ++p) {
            const double mid = breaks[k] + (p + 0.5) * width;
            const double half = 0.5 * width;
            for (std::size_t j = 0; j < abscissa.size(); ++j) {
                for (int sign : {-1, 1}) {
                    if (abscissa[j] == 0.0 && sign == 1) {
                        continue;
                    }
                    const double x = mid + sign * half * abscissa[j];
                    base[0] = x;
                    table.nodes.push_back(x);
                    table.weights.push_back(half * gl_weights[j]);
                    table.chords.push_back(axis_chord(body, base, 1));
                }
            }
        }
    }
    return table;
}

/// Integral of the weight over {x in K : x2 in [c, d]} restricted to the
/// table's node range.
inline double integrate_table(const ChordTable& t, const Weight& w, double c = -INFINITY,
                              double d = INFINITY)
{
    double total = 0.0;
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const Interval& ch = t.chords[i];
        if (ch.empty()) {
            continue;
        }
        const double a = std::max(ch.lo, c);
        const double b = std::min(ch.hi, d);
        if (b > a) {
            total += t.weights[i] * w.at(t.nodes[i] * t.nodes[i]) * w.segment(a, b);
        }
    }
    return total;
}

/// Integral of the weight over the body, d in {1, 2}.
class BodyIntegrator
{
  public:
    explicit BodyIntegrator(const BodySpec& body, int panels = 2000) : body_(body)
    {
        require(body.dim() == 1 || body.dim() == 2, "quadrature supports d in {1, 2}");
        if (body.dim() == 1) {
            chord_ = axis_chord(body, Vector::Zero(1), 0);
        } else {
            const Interval ext = axis_extent(body);
            require(!ext.empty(), "body has no interior on the scan grid");
            table_ = build_chord_table(body, {ext.lo, ext.hi}, panels);
        }
    }

    double integral(const Weight& w) const
    {
        if (body_.dim() == 1) {
            return w.segment(chord_.lo, chord_.hi);
        }
        return integrate_table(table_, w);
    }

    double volume() const { return integral(Weight::uniform()); }

    const BodySpec& body() const { return body_; }

  private:
    BodySpec body_;
    Interval chord_;
    ChordTable table_;
};

/// Cell masses of the target (weight restricted to the body), normalized
/// over the grid. d in {1, 2}.
inline GridDensity reference_grid(const BodySpec& body, const Weight& w, const Edges& edges,
                                  int panels_per_cell = 16)
{
    validate_edges(edges);
    require(static_cast<int>(edges.size()) == body.dim(), "grid and body dimensions differ");
    GridDensity g;
    g.d = body.dim();
    g.cell_edges = edges;
    if (g.d == 1) {
        const Interval ch = axis_chord(body, Vector::Zero(1), 0);
        for (std::size_t k = 0; k + 1 < edges[0].size(); ++k) {
            g.mass.push_back(
                w.segment(std::max(ch.lo, edges[0][k]), std::min(ch.hi, edges[0][k + 1])));
        }
    } else {
        const std::size_t n0 = edges[0].size() - 1;
        const std::size_t n1 = edges[1].size() - 1;
        g.mass.assign(n0 * n1, 0.0);
        const Interval ext = axis_extent(body);
        for (std::size_t i = 0; i < n0; ++i) {
            const double a = std::max(edges[0][i], ext.lo);
            const double b = std::min(edges[0][i + 1], ext.hi);
            if (!(b > a)) {
                continue;
            }
            const ChordTable t = build_chord_table(body, {a, b}, panels_per_cell);
            for (std::size_t j = 0; j < n1; ++j) {
                g.mass[i * n1 + j] = integrate_table(t, w, edges[1][j], edges[1][j + 1]);
            }
        }
    }
    double total = 0.0;
    for (double m : g.mass) {
        total += m;
    }
    require(total > 0.0, "grid does not overlap the body");
    for (double& m : g.mass) {
        m /= total;
    }
    return g;
}

/// Points of a regular grid over [-D, D]^d (d <= 2) that lie in the body,
/// plus the origin.
inline std::vector<Vector> grid_points_in(const BodySpec& body, int per_axis = 201)
{
    const int d = body.dim();
    require(d == 1 || d == 2, "grid points support d in {1, 2}");
    const double D = body.circumscribed_radius();
    std::vector<Vector> out{Vector::Zero(d)};
    Vector x(d);
    for (int i = 0; i < per_axis; ++i) {
        x[0] = -D + 2.0 * D * i / (per_axis - 1);
        if (d == 1) {
            if (body.holds(x)) {
                out.push_back(x);
            }
            continue;
        }
        for (int j = 0; j < per_axis; ++j) {
            x[1] = -D + 2.0 * D * j / (per_axis - 1);
            if (body.holds(x)) {
                out.push_back(x);
            }
        }
    }
    return out;
}

/// Closed form of the Gaussian weight over an axis-aligned box in any d.
inline double box_gaussian_integral(const Vector& lo, const Vector& hi, double sigma2)
{
    const Weight w = Weight::gaussian(sigma2);
    double prod = 1.0;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        prod *= w.segment(lo[i], hi[i]);
    }
    return prod;
}

inline double unit_ball_volume(int d)
{
    return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

}  // namespace proxsampler::verify
