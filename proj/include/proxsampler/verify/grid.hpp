// SPDX-License-Identifier: Apache-2.0
//
// Histogram densities on a 1-d or 2-d grid and the divergences between them.
// Cells are [e_k, e_{k+1}) except the last cell along each axis, which is
// closed. Cell masses are stored row-major (first axis slowest).

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "proxsampler/error.hpp"
#include "proxsampler/geometry.hpp"

namespace proxsampler::verify {

using Edges = std::vector<std::vector<double>>;

/// n + 1 evenly spaced breakpoints over [lo, hi].
inline std::vector<double> uniform_edges(double lo, double hi, int cells)
{
    require(cells >= 1 && hi > lo, "uniform_edges needs hi > lo and cells >= 1");
    std::vector<double> e(static_cast<std::size_t>(cells) + 1);
    for (int k = 0; k <= cells; ++k) {
        e[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / cells;
    }
    e.back() = hi;
    return e;
}

struct GridDensity
{
    int d = 0;
    Edges cell_edges;
    std::vector<double> mass;

    std::size_t cells_along(int axis) const
    {
        return cell_edges[static_cast<std::size_t>(axis)].size() - 1;
    }
    std::size_t cell_count() const { return mass.size(); }

    bool same_grid(const GridDensity& other) const
    {
        return d == other.d && cell_edges == other.cell_edges;
    }
};

inline void validate_edges(const Edges& edges)
{
    require(edges.size() == 1 || edges.size() == 2, "grids support d in {1, 2}");
    for (const auto& axis : edges) {
        require(axis.size() >= 2, "each axis needs at least one cell");
        for (std::size_t k = 1; k < axis.size(); ++k) {
            require(axis[k] > axis[k - 1], "cell edges must be strictly increasing");
        }
    }
}

/// Index of the cell holding v along one axis, or -1 when outside.
inline long locate(const std::vector<double>& axis, double v)
{
    if (!(v >= axis.front() && v <= axis.back())) {
        return -1;
    }
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    long k = static_cast<long>(it - axis.begin()) - 1;
    return std::min(k, static_cast<long>(axis.size()) - 2);
}

struct GridHistogram
{
    GridDensity density;
    std::size_t in_bounds = 0;
    std::size_t out_of_bounds = 0;
};

/// Normalized histogram. Samples outside the grid are counted and excluded.
inline GridHistogram grid_from_samples(const std::vector<Vector>& samples, const Edges& edges)
{
    validate_edges(edges);
    require(!samples.empty(), "grid_from_samples needs at least one sample");
    GridHistogram out;
    out.density.d = static_cast<int>(edges.size());
    out.density.cell_edges = edges;
    std::size_t total_cells = 1;
    for (const auto& axis : edges) {
        total_cells *= axis.size() - 1;
    }
    out.density.mass.assign(total_cells, 0.0);
    const std::size_t n1 = edges.size() == 2 ? edges[1].size() - 1 : 1;
    for (const Vector& x : samples) {
        require(x.size() == out.density.d, "sample dimension does not match the grid");
        const long i0 = locate(edges[0], x[0]);
        const long i1 = edges.size() == 2 ? locate(edges[1], x[1]) : 0;
        if (i0 < 0 || i1 < 0) {
            ++out.out_of_bounds;
            continue;
        }
        out.density.mass[static_cast<std::size_t>(i0) * n1 + static_cast<std::size_t>(i1)] += 1.0;
        ++out.in_bounds;
    }
    require(out.in_bounds > 0, "every sample fell outside the grid");
    for (double& m : out.density.mass) {
        m /= static_cast<double>(out.in_bounds);
    }
    return out;
}

//---------------------------------------------------------------------------//
// Divergences between discrete measures
//---------------------------------------------------------------------------//

inline void require_same_support_size(const std::vector<double>& mu, const std::vector<double>& pi)
{
    require(mu.size() == pi.size() && !mu.empty(), "measures must live on the same cells");
}

inline double tv_distance(const std::vector<double>& mu, const std::vector<double>& pi)
{
    require_same_support_size(mu, pi);
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        s += std::abs(mu[i] - pi[i]);
    }
    return 0.5 * s;
}

inline double kl_divergence(const std::vector<double>& mu, const std::vector<double>& pi)
{
    require_same_support_size(mu, pi);
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] > 0.0) {
            if (pi[i] <= 0.0) {
                return std::numeric_limits<double>::infinity();
            }
            s += mu[i] * std::log(mu[i] / pi[i]);
        }
    }
    return std::max(0.0, s);
}

inline double renyi_infinity(const std::vector<double>& mu, const std::vector<double>& pi)
{
    require_same_support_size(mu, pi);
    double best = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] > 0.0) {
            if (pi[i] <= 0.0) {
                return std::numeric_limits<double>::infinity();
            }
            best = any ? std::max(best, mu[i] / pi[i]) : mu[i] / pi[i];
            any = true;
        }
    }
    return any ? std::log(best) : 0.0;
}

/// R_q(mu || pi) = log(sum_i mu_i^q pi_i^(1-q)) / (q - 1); q = 1 is KL and
/// q = inf is log max_i mu_i / pi_i.
inline double renyi_divergence(const std::vector<double>& mu, const std::vector<double>& pi,
                               double q)
{
    require(q >= 1.0, "Renyi order must be >= 1");
    if (q == 1.0) {
        return kl_divergence(mu, pi);
    }
    if (std::isinf(q)) {
        return renyi_infinity(mu, pi);
    }
    require_same_support_size(mu, pi);
    // Factor out the largest ratio so the power sum cannot overflow.
    const double r_inf = renyi_infinity(mu, pi);
    if (std::isinf(r_inf)) {
        return r_inf;
    }
    const double top = std::exp(r_inf);
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (mu[i] > 0.0) {
            s += pi[i] * std::pow(mu[i] / pi[i] / top, q);
        }
    }
    return std::max(0.0, (q * r_inf + std::log(s)) / (q - 1.0));
}

/// ||dmu/dpi - 1||_{L^p(pi)}^p = sum_i pi_i |mu_i / pi_i - 1|^p.
inline double lp_discrepancy(const std::vector<double>& mu, const std::vector<double>& pi,
                             double p)
{
    require_same_support_size(mu, pi);
    require(p >= 1.0, "L^p order must be >= 1");
    double s = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        if (pi[i] > 0.0) {
            s += pi[i] * std::pow(std::abs(mu[i] / pi[i] - 1.0), p);
        } else if (mu[i] > 0.0) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return s;
}

struct DivergenceEstimates
{
    double tv = 0.0;
    double kl = 0.0;
    double renyi_q = 0.0;
    double q = 2.0;
    double renyi_2 = 0.0;
    double renyi_inf = 0.0;
    double lp = 0.0;
    double p = 2.0;
    /// mu puts mass where pi has none.
    bool support_violation = false;
};

/// Checks 2 TV^2 <= KL <= R_2 <= R_inf up to rounding.
inline bool hierarchy_holds(const DivergenceEstimates& e, double tol = 1e-12)
{
    auto le = [tol](double a, double b) { return std::isinf(b) || a <= b + tol * (1.0 + std::abs(b)); };
    return le(2.0 * e.tv * e.tv, e.kl) && le(e.kl, e.renyi_2) && le(e.renyi_2, e.renyi_inf);
}

inline DivergenceEstimates divergence_estimates(const std::vector<double>& mu,
                                                const std::vector<double>& pi, double q = 2.0,
                                                double p = 2.0)
{
    require_same_support_size(mu, pi);
    DivergenceEstimates e;
    e.q = q;
    e.p = p;
    e.tv = tv_distance(mu, pi);
    e.kl = kl_divergence(mu, pi);
    e.renyi_q = renyi_divergence(mu, pi, q);
    e.renyi_2 = renyi_divergence(mu, pi, 2.0);
    e.renyi_inf = renyi_infinity(mu, pi);
    e.lp = lp_discrepancy(mu, pi, p);
    e.support_violation = std::isinf(e.renyi_inf);
    if (!hierarchy_holds(e)) {
        throw std::logic_error("divergence hierarchy 2TV^2 <= KL <= R_2 <= R_inf violated");
    }
    return e;
}

inline DivergenceEstimates divergence_estimates(const GridDensity& mu, const GridDensity& pi,
                                                double q = 2.0, double p = 2.0)
{
    require(mu.same_grid(pi), "divergences need identical grids");
    return divergence_estimates(mu.mass, pi.mass, q, p);
}

/// Cellwise mu_i / pi_i: +inf where only pi vanishes, NaN where both do.
inline std::vector<double> density_ratio(const GridDensity& mu, const GridDensity& pi)
{
    require(mu.same_grid(pi), "ratios need identical grids");
    std::vector<double> r(mu.mass.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (pi.mass[i] > 0.0) {
            r[i] = mu.mass[i] / pi.mass[i];
        } else {
            r[i] = mu.mass[i] > 0.0 ? std::numeric_limits<double>::infinity()
                                    : std::numeric_limits<double>::quiet_NaN();
        }
    }
    return r;
}

/// mu P for a row-stochastic P.
inline std::vector<double> push_forward(const std::vector<double>& mu, const Eigen::MatrixXd& P)
{
    require(P.rows() == static_cast<Eigen::Index>(mu.size()) && P.cols() == P.rows(),
            "transition matrix must be square and match the measure");
    Eigen::RowVectorXd m(static_cast<Eigen::Index>(mu.size()));
    for (std::size_t i = 0; i < mu.size(); ++i) {
        m[static_cast<Eigen::Index>(i)] = mu[i];
    }
    const Eigen::RowVectorXd out = m * P;
    return {out.data(), out.data() + out.size()};
}

}  // namespace proxsampler::verify
