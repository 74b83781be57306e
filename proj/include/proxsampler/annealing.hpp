// SPDX-License-Identifier: Apache-2.0
//
// Gaussian cooling driven by the proximal sampler.
//
// The body is first truncated to Kbar = K ∩ B_{L sqrt(d)}(0) with
// L = C log(3e / eps). A chain then walks through truncated Gaussians
// N(0, s2 I)|_Kbar with s2 increasing from 1/d to L^2 d, each stage started
// from the previous stage's output, and finishes with the uniform law on Kbar:
//
//   Phase I    s2 = 1/d, start Unif(B_1(0)), warmness gamma sqrt(d)
//   Phase II   s2 <- min(1, s2 (1 + 1/d))
//   Phase III  s2 <- min(L^2 d, s2 (1 + s2 / (L^2 d)))
//   Phase IV   uniform on Kbar with D = 2 L sqrt(d), accuracy eps/3
//
// Phases I-III target log 2 accuracy in R-infinity so that every hand-off is
// 2 sqrt(e)-warm. Every run gets failure budget eta / (number of runs).

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "proxsampler/error.hpp"
#include "proxsampler/geometry.hpp"
#include "proxsampler/sampler.hpp"

namespace proxsampler {

enum class Phase
{
    I,
    II,
    III,
    IV,
};

inline const char* to_string(Phase p)
{
    switch (p) {
        case Phase::I: return "I";
        case Phase::II: return "II";
        case Phase::III: return "III";
        case Phase::IV: return "IV";
    }
    return "?";
}

struct RetryPolicy
{
    enum class Mode
    {
        abort,
        retry_phase,
    };
    Mode mode = Mode::abort;
    unsigned max_retries = 0;

    static RetryPolicy abort() { return {}; }
    static RetryPolicy retry_phase(unsigned k) { return {Mode::retry_phase, k}; }

    bool operator==(const RetryPolicy&) const = default;
};

struct CoolingConfig
{
    double C = 1.0;
    double eps = 0.5;
    double eta = 0.1;
    TuningConstants tuning;
    RetryPolicy retry;
    /// Keep per-iteration trial lists in every phase's ledger.
    bool record_trials = false;
};

inline void validate(const CoolingConfig& c)
{
    require(std::isfinite(c.C) && c.C >= 1.0, "well-roundedness constant C must be >= 1");
    require(c.eps > 0.0 && c.eps < 1.0, "eps must lie in (0, 1)");
    require(c.eta > 0.0 && c.eta < 1.0, "eta must lie in (0, 1)");
}

/// L = C log(3e / eps).
inline double truncation_scale(double C, double eps) { return C * std::log(3.0 * std::numbers::e / eps); }

struct CoolingSchedule
{
    double L = 0.0;
    /// Variances of the Gaussian stages, strictly increasing from 1/d to L^2 d.
    std::vector<double> sigma2_sequence;
    /// Phase label (I, II or III) of each entry of sigma2_sequence.
    std::vector<Phase> phases;
    double hat_eta = 0.0;
    /// Kbar; absent when the schedule was built from a dimension alone.
    std::optional<BodySpec> truncated_body;

    std::size_t count(Phase p) const
    {
        return static_cast<std::size_t>(std::count(phases.begin(), phases.end(), p));
    }

    /// Sampler runs in a failure-free pass: Phase I, II, III entries, and IV.
    std::size_t run_count() const { return 2 + count(Phase::II) + count(Phase::III); }

    bool operator==(const CoolingSchedule&) const = default;
};

inline CoolingSchedule build_schedule(int d, const CoolingConfig& config)
{
    require(d >= 1, "dimension must be >= 1");
    validate(config);
    CoolingSchedule s;
    s.L = truncation_scale(config.C, config.eps);
    const double dd = d;
    const double top = s.L * s.L * dd;

    double sigma2 = 1.0 / dd;
    s.sigma2_sequence.push_back(sigma2);
    s.phases.push_back(Phase::I);
    while (sigma2 < 1.0) {
        sigma2 = std::min(1.0, sigma2 * (1.0 + 1.0 / dd));
        s.sigma2_sequence.push_back(sigma2);
        s.phases.push_back(Phase::II);
    }
    while (sigma2 < top) {
        sigma2 = std::min(top, sigma2 * (1.0 + sigma2 / top));
        s.sigma2_sequence.push_back(sigma2);
        s.phases.push_back(Phase::III);
    }
    s.hat_eta = config.eta / static_cast<double>(s.run_count());
    return s;
}

inline CoolingSchedule build_schedule(const BodySpec& body, const CoolingConfig& config)
{
    CoolingSchedule s = build_schedule(body.dim(), config);
    s.truncated_body = truncate_to_ball(body, s.L * std::sqrt(static_cast<double>(body.dim())));
    return s;
}

struct PhaseRecord
{
    Phase phase = Phase::I;
    /// Variance of the stage target; absent for the uniform Phase IV.
    std::optional<double> sigma2;
    /// 0 for the first attempt, k for the k-th retry.
    unsigned attempt = 0;
    RunReport report;
    double wall_seconds = 0.0;

    bool operator==(const PhaseRecord&) const = default;
};

struct CoolingReport
{
    std::vector<PhaseRecord> per_phase;
    std::uint64_t total_queries = 0;
    std::optional<Vector> final_point;
    bool failed = false;
    /// Index into per_phase of the attempt that ended the run.
    std::optional<std::size_t> failed_phase;
    CoolingSchedule schedule;
    RetryPolicy retry;
    double wall_seconds = 0.0;

    bool operator==(const CoolingReport& other) const
    {
        return per_phase == other.per_phase && total_queries == other.total_queries
               && same_point(final_point, other.final_point) && failed == other.failed
               && failed_phase == other.failed_phase && schedule == other.schedule
               && retry == other.retry && wall_seconds == other.wall_seconds;
    }
};

/// Phase-by-phase sampler parameters, exposed so callers can audit the plan
/// without running it.
struct PhasePlan
{
    Phase phase;
    std::optional<double> sigma2;
    TargetSpec target;
    ProxParams params;
};

inline std::vector<PhasePlan> plan_cooling(const CoolingSchedule& schedule,
                                           const CoolingConfig& config)
{
    require(schedule.truncated_body.has_value(), "cooling plan needs a truncated body");
    const BodySpec& kbar = *schedule.truncated_body;
    const int d = kbar.dim();
    const double dd = d;
    const double sqrt_e = std::sqrt(std::numbers::e);
    const double stage_accuracy = std::numbers::ln2;
    const double d_bar = std::max(1.0, kbar.circumscribed_radius());

    std::vector<PhasePlan> plans;
    plans.reserve(schedule.run_count());
    for (std::size_t k = 0; k < schedule.sigma2_sequence.size(); ++k) {
        const double s2 = schedule.sigma2_sequence[k];
        const double warmness =
            schedule.phases[k] == Phase::I ? config.tuning.phase1_gamma * std::sqrt(dd) : 2.0 * sqrt_e;
        plans.push_back({schedule.phases[k], s2, TargetSpec::truncated_gaussian(kbar, s2),
                         plan_gaussian(d, s2, d_bar, std::max(1.0, warmness), schedule.hat_eta,
                                       stage_accuracy, config.tuning)});
    }
    plans.push_back({Phase::IV, std::nullopt, TargetSpec::uniform(kbar),
                     plan_uniform(d, 2.0 * schedule.L * std::sqrt(dd), 2.0 * sqrt_e,
                                  schedule.hat_eta, config.eps / 3.0, config.tuning)});
    return plans;
}

template <class Rng>
CoolingReport run_cooling(const BodySpec& body, const CoolingConfig& config, Rng& rng)
{
    validate(config);
    const int d = body.dim();
    require(body.inscribed_radius() >= 1.0, "cooling needs B_1(0) inside the body");
    require(body.holds(Vector::Zero(d)), "cooling needs 0 in the body");

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    CoolingReport out;
    out.retry = config.retry;
    out.schedule = build_schedule(body, config);
    const std::vector<PhasePlan> plans = plan_cooling(out.schedule, config);
    const RunOptions options{config.record_trials};
    const unsigned max_attempts =
        config.retry.mode == RetryPolicy::Mode::retry_phase ? config.retry.max_retries + 1 : 1;

    Vector x = sample_unit_ball(d, rng);
    for (const PhasePlan& plan : plans) {
        bool done = false;
        for (unsigned attempt = 0; attempt < max_attempts && !done; ++attempt) {
            const auto t0 = clock::now();
            PhaseRecord rec{plan.phase, plan.sigma2, attempt,
                            run_prox(plan.target, plan.params, x, rng, options), 0.0};
            rec.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
            out.total_queries += rec.report.ledger.total_queries;
            if (!rec.report.failed) {
                x = *rec.report.final_point;
                done = true;
            }
            out.per_phase.push_back(std::move(rec));
        }
        if (!done) {
            out.failed = true;
            out.failed_phase = out.per_phase.size() - 1;
            break;
        }
    }
    if (!out.failed) {
        out.final_point = x;
    }
    out.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    return out;
}

}  // namespace proxsampler
