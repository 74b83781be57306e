// SPDX-License-Identifier: Apache-2.0
//
// Proximal sampler for uniform and truncated-Gaussian targets on a convex
// body given by a membership oracle.
//
// One iteration alternates
//   forward:  y ~ N(x, h I)
//   backward: x ~ N(y, h I)|_K                       (uniform target)
//             x ~ N(y / (1 + h/s2), h / (1 + h/s2) I)|_K  (N(0, s2 I)|_K target)
// where the backward law is realized by rejection with at most N proposals.
// Exhausting N proposals is a Failure; it ends the run and is reported, never
// retried here.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>

#include "proxsampler/error.hpp"
#include "proxsampler/geometry.hpp"

namespace proxsampler {

enum class TargetKind
{
    uniform,
    truncated_gaussian,
};

struct TargetSpec
{
    TargetKind kind = TargetKind::uniform;
    /// Variance of the untruncated Gaussian; unused for uniform targets.
    double sigma2 = 0.0;
    BodySpec body;

    static TargetSpec uniform(BodySpec body) { return {TargetKind::uniform, 0.0, std::move(body)}; }

    static TargetSpec truncated_gaussian(BodySpec body, double sigma2)
    {
        require(std::isfinite(sigma2) && sigma2 > 0.0, "sigma2 must be finite and positive");
        return {TargetKind::truncated_gaussian, sigma2, std::move(body)};
    }
};

/// Constants hidden by the asymptotic statements of the parameter formulas.
/// All logarithms are natural and their arguments are clamped below at e.
struct TuningConstants
{
    double c_uniform = 1.0;            // c_n in n for uniform targets
    double c_gaussian = 1.0;           // c_g in n for Gaussian targets
    double iteration_log_power = 2.0;  // n ∝ log(.)^2
    double threshold_log_power = 4.0;  // N = Z log(Z)^4
    double phase1_gamma = 3.0;         // warmness of Unif(B_1) is <= gamma sqrt(d)
    std::uint64_t threshold_cap = 1'000'000'000;
    /// Use h = s2 (loglog Z / log Z)(1/d ∧ 1/(d^2 s2 - loglog Z / (2 log Z)))
    /// instead of h = s2 (1/d ∧ 1/(d^2 s2 - 1)) / log Z for Gaussian targets.
    bool loglog_gaussian_step = false;

    bool operator==(const TuningConstants&) const = default;
};

struct ProxParams
{
    double h = 0.0;
    std::uint64_t N = 1;
    std::uint64_t n = 0;
    double M = 1.0;
    double eta = 0.5;
    double eps = 0.5;
    /// Set when the planner's N exceeded TuningConstants::threshold_cap.
    bool threshold_capped = false;
    double threshold_uncapped = 0.0;

    bool operator==(const ProxParams&) const = default;
};

inline void validate(const ProxParams& p)
{
    require(std::isfinite(p.h) && p.h > 0.0, "h must be finite and positive");
    require(p.N >= 1, "rejection threshold N must be >= 1");
    require(p.M >= 1.0, "warmness M must be >= 1");
}

inline double clamped_log(double x) { return std::log(std::max(x, std::numbers::e)); }

namespace detail {

inline void validate_planner_inputs(int d, double D, double M, double eta, double eps)
{
    require(d >= 1, "dimension must be >= 1");
    require(std::isfinite(D) && D >= 1.0, "D must be finite and >= 1");
    require(std::isfinite(M) && M >= 1.0, "M must be finite and >= 1");
    require(eta > 0.0 && eta < 1.0, "eta must lie in (0, 1)");
    require(eps > 0.0 && std::isfinite(eps), "eps must be finite and positive");
}

inline void set_threshold(ProxParams& p, const TuningConstants& tuning)
{
    const double z = 9.0 * static_cast<double>(p.n) * p.M / p.eta;
    const double raw = std::ceil(z * std::pow(clamped_log(z), tuning.threshold_log_power));
    p.threshold_uncapped = raw;
    if (raw > static_cast<double>(tuning.threshold_cap)) {
        p.N = tuning.threshold_cap;
        p.threshold_capped = true;
    } else {
        p.N = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(raw));
        p.threshold_capped = false;
    }
}

inline std::uint64_t ceil_count(double value)
{
    require(std::isfinite(value) && value < 9.0e18, "iteration count overflow");
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(value)));
}

}  // namespace detail

/// Step size for uniform targets given the iteration count:
/// h = 1 / (2 d^2 log(9 n M / eta)).
inline double uniform_step(int d, double n, double M, double eta)
{
    return 1.0 / (2.0 * d * d * clamped_log(9.0 * n * M / eta));
}

/// Parameters for a uniform target. n and h depend on each other; we take a
/// provisional h with n = 1, derive n, re-derive h, re-derive n, and finally
/// set h from that n so that h * 2 d^2 log(9 n M / eta) = 1 holds for the
/// returned pair.
inline ProxParams plan_uniform(int d, double D, double M, double eta, double eps,
                               const TuningConstants& tuning = {})
{
    detail::validate_planner_inputs(d, D, M, eta, eps);
    require(eps < 1.0, "eps must lie in (0, 1)");
    const double dd = d;
    auto iterations = [&](double h) {
        const double arg = M * (dd + D * D / h) / (eta * eps);
        return detail::ceil_count(tuning.c_uniform * dd * dd * D * D
                                  * std::pow(clamped_log(arg), tuning.iteration_log_power));
    };
    ProxParams p;
    p.M = M;
    p.eta = eta;
    p.eps = eps;
    const double h0 = uniform_step(d, 1.0, M, eta);
    const std::uint64_t n0 = iterations(h0);
    const double h1 = uniform_step(d, static_cast<double>(n0), M, eta);
    p.n = iterations(h1);
    p.h = uniform_step(d, static_cast<double>(p.n), M, eta);
    detail::set_threshold(p, tuning);
    return p;
}

/// Step size for N(0, s2 I)|_K targets given the iteration count.
inline double gaussian_step(int d, double sigma2, double n, double M, double eta,
                            const TuningConstants& tuning = {})
{
    const double dd = d;
    const double log_z = clamped_log(9.0 * n * M / eta);
    if (tuning.loglog_gaussian_step) {
        const double ratio = clamped_log(log_z) / log_z;
        const double denom = dd * dd * sigma2 - ratio / 2.0;
        const double branch = denom <= dd ? 1.0 / dd : std::min(1.0 / dd, 1.0 / denom);
        return sigma2 * ratio * branch;
    }
    const double branch = (dd * dd * sigma2 <= 1.0 + 1e-6)
                              ? 1.0 / dd
                              : std::min(1.0 / dd, 1.0 / (dd * dd * sigma2 - 1.0));
    return sigma2 * branch / log_z;
}

inline ProxParams plan_gaussian(int d, double sigma2, double D, double M, double eta, double eps,
                                const TuningConstants& tuning = {})
{
    detail::validate_planner_inputs(d, D, M, eta, eps);
    require(std::isfinite(sigma2) && sigma2 > 0.0, "sigma2 must be finite and positive");
    const double dd = d;
    ProxParams p;
    p.M = M;
    p.eta = eta;
    p.eps = eps;
    // n does not depend on h here, so the two passes agree after the first.
    p.n = detail::ceil_count(tuning.c_gaussian * std::max(dd, dd * dd * sigma2)
                             * std::pow(clamped_log(M * D / (eta * eps)),
                                        tuning.iteration_log_power));
    p.h = gaussian_step(d, sigma2, static_cast<double>(p.n), M, eta, tuning);
    detail::set_threshold(p, tuning);
    return p;
}

//---------------------------------------------------------------------------//
// Kernels
//---------------------------------------------------------------------------//

/// y = x + sqrt(h) * zeta, zeta ~ N(0, I).
template <class Rng>
void forward_step_into(const Vector& x, double h, Rng& rng, Vector& y)
{
    require(h > 0.0, "forward step needs h > 0");
    const double sd = std::sqrt(h);
    y.resize(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        y[i] = x[i] + sd * rng.gaussian();
    }
}

template <class Rng>
Vector forward_step(const Vector& x, double h, Rng& rng)
{
    Vector y;
    forward_step_into(x, h, rng, y);
    return y;
}

struct GaussianProposal
{
    double mean_factor;
    double variance;
};

/// Backward proposal for N(0, s2 I)|_K: mean y / (1 + h/s2), variance h / (1 + h/s2).
inline GaussianProposal gaussian_backward_proposal(double h, double sigma2)
{
    const double shrink = 1.0 + h / sigma2;
    return {1.0 / shrink, h / shrink};
}

/// Draws from N(mean_factor * y, variance I) until a draw lands in K or N
/// draws were rejected. Each draw costs one query. Returns false on Failure.
template <class Rng>
bool rejection_step_into(const Vector& y, const GaussianProposal& proposal, std::uint64_t N,
                         const BodySpec& body, Rng& rng, QueryLedger& ledger, Vector& out)
{
    require(proposal.variance > 0.0, "backward step needs positive variance");
    require(N >= 1, "backward step needs N >= 1");
    const double sd = std::sqrt(proposal.variance);
    out.resize(y.size());
    for (std::uint64_t trial = 0; trial < N; ++trial) {
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            out[i] = proposal.mean_factor * y[i] + sd * rng.gaussian();
        }
        if (contains(body, out, ledger)) {
            return true;
        }
    }
    return false;
}

template <class Rng>
std::optional<Vector> backward_step_uniform(const Vector& y, double h, std::uint64_t N,
                                            const BodySpec& body, Rng& rng, QueryLedger& ledger)
{
    require(h > 0.0, "backward step needs h > 0");
    Vector out;
    if (rejection_step_into(y, GaussianProposal{1.0, h}, N, body, rng, ledger, out)) {
        return out;
    }
    return std::nullopt;
}

template <class Rng>
std::optional<Vector> backward_step_gaussian(const Vector& y, double h, double sigma2,
                                             std::uint64_t N, const BodySpec& body, Rng& rng,
                                             QueryLedger& ledger)
{
    require(h > 0.0, "backward step needs h > 0");
    require(sigma2 > 0.0, "backward step needs sigma2 > 0");
    Vector out;
    if (rejection_step_into(y, gaussian_backward_proposal(h, sigma2), N, body, rng, ledger,
                            out)) {
        return out;
    }
    return std::nullopt;
}

//---------------------------------------------------------------------------//
// Chains
//---------------------------------------------------------------------------//

struct RunReport
{
    std::optional<Vector> final_point;
    bool failed = false;
    std::optional<std::uint64_t> failure_iteration;
    QueryLedger ledger;
    ProxParams params_used;

    bool operator==(const RunReport& other) const
    {
        return same_point(final_point, other.final_point) && failed == other.failed && failure_iteration == other.failure_iteration
               && ledger == other.ledger && params_used == other.params_used;
    }
};

struct RunOptions
{
    /// Keep the per-iteration trial list (memory grows with n).
    bool record_trials = true;
};

/// Runs params.n iterations of the proximal sampler from `init`.
template <class Rng>
RunReport run_prox(const TargetSpec& target, const ProxParams& params, const Vector& init,
                   Rng& rng, const RunOptions& options = {})
{
    validate(params);
    const BodySpec& body = target.body;
    require(init.size() == body.dim(), "initial point has the wrong dimension");
    require(all_finite(init), "initial point must be finite");
    require(body.holds(init), "initial point is not in the body");
    if (target.kind == TargetKind::truncated_gaussian) {
        require(std::isfinite(target.sigma2) && target.sigma2 > 0.0,
                "truncated Gaussian target needs sigma2 > 0");
    }

    const GaussianProposal proposal = target.kind == TargetKind::uniform
                                          ? GaussianProposal{1.0, params.h}
                                          : gaussian_backward_proposal(params.h, target.sigma2);

    RunReport report;
    report.params_used = params;
    report.ledger.detailed = options.record_trials;
    if (options.record_trials) {
        report.ledger.per_iteration_trials.reserve(static_cast<std::size_t>(
            std::min<std::uint64_t>(params.n, std::uint64_t{1} << 24)));
    }

    Vector x = init;
    Vector y(init.size());
    Vector next(init.size());
    for (std::uint64_t i = 0; i < params.n; ++i) {
        forward_step_into(x, params.h, rng, y);
        const std::uint64_t before = report.ledger.total_queries;
        const bool ok =
            rejection_step_into(y, proposal, params.N, body, rng, report.ledger, next);
        report.ledger.record_iteration(report.ledger.total_queries - before);
        if (!ok) {
            ++report.ledger.failures;
            report.failed = true;
            report.failure_iteration = i;
            return report;
        }
        x.swap(next);
    }
    report.final_point = std::move(x);
    return report;
}

}  // namespace proxsampler
