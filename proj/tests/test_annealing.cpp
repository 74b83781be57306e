// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "proxsampler/annealing.hpp"
#include "proxsampler/verify/warmness.hpp"

using namespace proxsampler;

namespace {

CoolingConfig config(double C, double eps, double eta = 0.1)
{
    CoolingConfig c;
    c.C = C;
    c.eps = eps;
    c.eta = eta;
    return c;
}

std::size_t ceil_log2(double x) { return static_cast<std::size_t>(std::ceil(std::log2(x))); }

}  // namespace

TEST(Schedule, FourDimensionalExample)
{
    const CoolingSchedule s = build_schedule(4, config(1.0, 0.1));
    EXPECT_DOUBLE_EQ(s.L, std::log(30.0 * std::numbers::e));
    EXPECT_EQ(s.sigma2_sequence.front(), 0.25);
    EXPECT_EQ(s.sigma2_sequence.back(), s.L * s.L * 4.0);
    EXPECT_EQ(s.count(Phase::I), 1u);
    EXPECT_EQ(s.count(Phase::II), 7u);
    for (std::size_t i = 1; i < s.sigma2_sequence.size(); ++i) {
        EXPECT_GT(s.sigma2_sequence[i], s.sigma2_sequence[i - 1]);
    }
}

TEST(Schedule, OneDimensionHasNoPhaseTwo)
{
    const CoolingSchedule s = build_schedule(1, config(1.0, 0.1));
    EXPECT_EQ(s.sigma2_sequence.front(), 1.0);
    EXPECT_EQ(s.count(Phase::II), 0u);
    EXPECT_GT(s.count(Phase::III), 0u);
}

TEST(Schedule, RecurrencesAndBounds)
{
    for (int d : {1, 2, 3, 5, 8, 16, 40}) {
        for (double C : {1.0, 1.5, 3.0}) {
            for (double eps : {0.05, 0.3, 0.9}) {
                const CoolingSchedule s = build_schedule(d, config(C, eps));
                const double top = s.L * s.L * d;
                ASSERT_EQ(s.sigma2_sequence.size(), s.phases.size());
                EXPECT_EQ(s.sigma2_sequence.front(), 1.0 / d);
                EXPECT_EQ(s.sigma2_sequence.back(), top);
                for (std::size_t i = 1; i < s.sigma2_sequence.size(); ++i) {
                    const double a = s.sigma2_sequence[i - 1];
                    const double b = s.sigma2_sequence[i];
                    ASSERT_GT(b, a);
                    if (s.phases[i] == Phase::II) {
                        ASSERT_EQ(b, std::min(1.0, a * (1.0 + 1.0 / d)));
                    } else {
                        ASSERT_EQ(s.phases[i], Phase::III);
                        ASSERT_EQ(b, std::min(top, a * (1.0 + a / top)));
                    }
                }
                const std::size_t dd = static_cast<std::size_t>(d);
                EXPECT_LE(s.count(Phase::II), dd * ceil_log2(d) + dd);
                EXPECT_LE(s.count(Phase::III),
                          ceil_log2(top) * static_cast<std::size_t>(std::ceil(top)));
                EXPECT_DOUBLE_EQ(s.hat_eta,
                                 0.1 / (2.0 + s.count(Phase::II) + s.count(Phase::III)));
            }
        }
    }
}

TEST(Schedule, CardinalityTracksLSquaredD)
{
    // Phase III takes about 2 L^2 d steps and Phase II about d log d.
    for (int d : {1, 2, 4, 8, 16, 32}) {
        for (double C : {1.0, 2.0}) {
            for (double eps : {0.01, 0.5}) {
                const CoolingSchedule s = build_schedule(d, config(C, eps));
                const double scale = s.L * s.L * d + d * std::log(d + 1.0);
                const double ratio = static_cast<double>(s.run_count()) / scale;
                EXPECT_GE(ratio, 0.5) << d << " " << C << " " << eps;
                EXPECT_LE(ratio, 3.0) << d << " " << C << " " << eps;
            }
        }
    }
}

TEST(Schedule, ConfigValidation)
{
    EXPECT_THROW(build_schedule(2, config(0.5, 0.1)), ContractViolation);
    EXPECT_THROW(build_schedule(2, config(1.0, 1.0)), ContractViolation);
    EXPECT_THROW(build_schedule(2, config(1.0, 0.1, 0.0)), ContractViolation);
    EXPECT_THROW(build_schedule(0, config(1.0, 0.1)), ContractViolation);
}

TEST(Plan, PhaseFourTargetsTheTruncatedBody)
{
    const BodySpec box = make_cube(3, 2.0);
    const CoolingConfig c = config(1.0, 0.5);
    const CoolingSchedule s = build_schedule(box, c);
    const auto plans = plan_cooling(s, c);
    ASSERT_EQ(plans.size(), s.run_count());
    const PhasePlan& last = plans.back();
    EXPECT_EQ(last.phase, Phase::IV);
    EXPECT_EQ(last.target.kind, TargetKind::uniform);
    EXPECT_TRUE(last.target.body == *s.truncated_body);
    EXPECT_FALSE(last.target.body == box);
    for (const auto& p : plans) {
        EXPECT_TRUE(p.target.body == *s.truncated_body);
        EXPECT_EQ(p.params.eta, s.hat_eta);
    }
    EXPECT_EQ(plans.front().params.M, 3.0 * std::sqrt(3.0));
    EXPECT_EQ(plans[1].params.M, 2.0 * std::sqrt(std::numbers::e));
    EXPECT_EQ(plans[1].params.eps, std::numbers::ln2);
    EXPECT_EQ(last.params.eps, 0.5 / 3.0);
}

TEST(RunCooling, MostSeededRunsSucceed)
{
    const BodySpec box = make_cube(2, 2.0);
    const CoolingConfig c = config(2.0, 0.5, 0.1);
    int ok = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        RandomStream rng(seed, 0);
        const CoolingReport r = run_cooling(box, c, rng);
        ok += r.failed ? 0 : 1;
        if (!r.failed) {
            ASSERT_TRUE(r.final_point);
            ASSERT_TRUE(r.schedule.truncated_body->holds(*r.final_point));
        }
    }
    EXPECT_GE(ok, 95);
}

TEST(RunCooling, ReportInvariants)
{
    const BodySpec ball = make_ball(3, 1.5);
    RandomStream rng(3, 1);
    CoolingConfig c = config(1.0, 0.5);
    c.record_trials = true;
    const CoolingReport r = run_cooling(ball, c, rng);
    ASSERT_FALSE(r.failed);
    EXPECT_EQ(r.per_phase.size(), r.schedule.run_count());
    std::uint64_t sum = 0;
    for (const auto& p : r.per_phase) {
        sum += p.report.ledger.total_queries;
        std::uint64_t trials = 0;
        for (auto t : p.report.ledger.per_iteration_trials) {
            trials += t;
        }
        EXPECT_EQ(trials, p.report.ledger.total_queries);
    }
    EXPECT_EQ(sum, r.total_queries);
    EXPECT_EQ(r.per_phase.back().phase, Phase::IV);
    EXPECT_FALSE(r.per_phase.back().sigma2);
}

TEST(RunCooling, DeterministicForFixedStream)
{
    const BodySpec box = make_cube(2, 2.0);
    RandomStream a(11, 2), b(11, 2);
    CoolingReport ra = run_cooling(box, config(1.0, 0.5), a);
    CoolingReport rb = run_cooling(box, config(1.0, 0.5), b);
    ASSERT_TRUE(ra.final_point && rb.final_point);
    EXPECT_EQ(*ra.final_point, *rb.final_point);
    EXPECT_EQ(ra.total_queries, rb.total_queries);
}

TEST(RunCooling, AbortStopsAtTheFirstFailure)
{
    // N = 1 makes failures common.
    CoolingConfig c = config(1.0, 0.5);
    c.tuning.threshold_cap = 1;
    const BodySpec box = make_cube(2, 2.0);
    RandomStream rng(4, 0);
    const CoolingReport r = run_cooling(box, c, rng);
    ASSERT_TRUE(r.failed);
    ASSERT_TRUE(r.failed_phase);
    EXPECT_EQ(*r.failed_phase, r.per_phase.size() - 1);
    EXPECT_TRUE(r.per_phase.back().report.failed);
    EXPECT_FALSE(r.final_point);
    for (std::size_t i = 0; i + 1 < r.per_phase.size(); ++i) {
        EXPECT_FALSE(r.per_phase[i].report.failed);
        EXPECT_EQ(r.per_phase[i].attempt, 0u);
    }
}

TEST(RunCooling, RetryPhaseRerunsFromTheLastGoodPoint)
{
    // A small N makes Phase IV fail now and then; retries should rescue it.
    CoolingConfig c = config(1.0, 0.5);
    c.tuning.threshold_cap = 3000;
    const BodySpec box = make_cube(2, 2.0);
    int abort_failures = 0, retry_failures = 0;
    std::size_t retries = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        c.retry = RetryPolicy::abort();
        RandomStream a(seed, 0);
        abort_failures += run_cooling(box, c, a).failed ? 1 : 0;

        c.retry = RetryPolicy::retry_phase(5);
        RandomStream b(seed, 0);
        const CoolingReport r = run_cooling(box, c, b);
        retry_failures += r.failed ? 1 : 0;
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < r.per_phase.size(); ++i) {
            const auto& p = r.per_phase[i];
            sum += p.report.ledger.total_queries;
            if (p.attempt > 0) {
                ++retries;
                ASSERT_GT(i, 0u);
                ASSERT_TRUE(r.per_phase[i - 1].report.failed);
                ASSERT_EQ(r.per_phase[i - 1].phase, p.phase);
                ASSERT_EQ(r.per_phase[i - 1].attempt + 1, p.attempt);
            }
            ASSERT_LE(p.attempt, 5u);
        }
        EXPECT_EQ(sum, r.total_queries);
    }
    EXPECT_GT(retries, 0u);
    EXPECT_GT(abort_failures, 0);
    EXPECT_LT(retry_failures, abort_failures);
}

TEST(RunCooling, QueriesGrowWithDimension)
{
    const CoolingConfig c = config(2.0 / std::sqrt(3.0), 0.5);
    std::uint64_t previous = 0;
    for (int d : {2, 4, 8}) {
        RandomStream rng(6, static_cast<std::uint64_t>(d));
        const CoolingReport r = run_cooling(make_cube(d, 2.0), c, rng);
        ASSERT_FALSE(r.failed);
        EXPECT_GE(r.total_queries, previous) << "d=" << d;
        previous = r.total_queries;
    }
}

TEST(RunCooling, RejectsBodiesWithoutTheUnitBall)
{
    RandomStream rng(1, 0);
    const BodySpec thin = make_cube(2, 0.5, Normalization::any_inradius);
    EXPECT_THROW(run_cooling(thin, config(1.0, 0.5), rng), ContractViolation);
}

TEST(Warmness, HandoffsInLowDimension)
{
    const double sqrt_e = std::sqrt(std::numbers::e);
    const std::vector<std::pair<BodySpec, double>> cases{
        {make_cube(1, 2.0), 2.0}, {make_cube(2, 2.0), 2.0}, {make_ball(2, 2.0), 1.0},
        {make_box(Eigen::Vector2d(-1, -3), Eigen::Vector2d(4, 1)), 2.5}};
    for (const auto& [body, C] : cases) {
        const verify::WarmnessLedger w = verify::audit_warmness(body, config(C, 0.5));
        EXPECT_LE(w.max_stage_ratio(), sqrt_e * (1.0 + 1e-9));
        EXPECT_LE(w.phase4_ratio, sqrt_e * (1.0 + 1e-9));
        EXPECT_LE(w.phase1_ratio, 3.0 * std::sqrt(static_cast<double>(body.dim())));
        EXPECT_GE(w.truncation_mass, 1.0 - 0.5 / 3.0);
    }
}

TEST(Warmness, PhaseOneBoundUpToSixDimensions)
{
    for (int d = 1; d <= 6; ++d) {
        for (double hw : {1.0, 2.0}) {
            const double L = truncation_scale(1.0, 0.5);
            const double ratio = verify::phase1_ratio_box(Vector::Constant(d, -hw),
                                                          Vector::Constant(d, hw), L);
            EXPECT_LE(ratio, 3.0 * std::sqrt(static_cast<double>(d))) << "d=" << d;
            EXPECT_GE(ratio, 1.0);
        }
    }
}
