// SPDX-License-Identifier: Apache-2.0
//
// Exact warmness audit of a cooling schedule (d <= 2, by quadrature).
//
// For consecutive stages mu_k = N(0, s_k I)|_Kbar the density ratio is
//   mu_k(x) / mu_{k+1}(x) = exp(-|x|^2/(2 s_k) + |x|^2/(2 s_{k+1})) Z_{k+1} / Z_k
// with Z_k the Gaussian mass of Kbar. The audit maximizes each ratio over a
// grid of Kbar, and likewise the Phase I ratio Unif(B_1) / mu_1 over B_1 and
// the Phase IV ratio mu_last / Unif(Kbar).

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "proxsampler/annealing.hpp"
#include "proxsampler/error.hpp"
#include "proxsampler/geometry.hpp"
#include "proxsampler/verify/quadrature.hpp"

namespace proxsampler::verify {

struct StageRatio
{
    Phase phase;       // phase of the later stage
    double sigma2_from = 0.0;
    double sigma2_to = 0.0;
    double max_ratio = 0.0;
};

struct WarmnessLedger
{
    double phase1_ratio = 0.0;            // sup_{B_1} Unif(B_1) / mu_1
    std::vector<StageRatio> stages;       // Phase II and III hand-offs
    double phase4_ratio = 0.0;            // sup_{Kbar} mu_last / Unif(Kbar)
    double truncation_mass = 0.0;         // vol(Kbar) / vol(K)

    double max_stage_ratio() const
    {
        double m = 0.0;
        for (const auto& s : stages) {
            m = std::max(m, s.max_ratio);
        }
        return m;
    }
};

inline WarmnessLedger audit_warmness(const BodySpec& body, const CoolingConfig& config,
                                     int grid_per_axis = 201, int panels = 2000)
{
    const int d = body.dim();
    require(d == 1 || d == 2, "warmness audit supports d in {1, 2}");
    const CoolingSchedule schedule = build_schedule(body, config);
    const BodySpec& kbar = *schedule.truncated_body;

    const BodyIntegrator on_kbar(kbar, panels);
    const BodyIntegrator on_body(body, panels);
    const std::vector<Vector> points = grid_points_in(kbar, grid_per_axis);

    std::vector<double> z;
    z.reserve(schedule.sigma2_sequence.size());
    for (double s2 : schedule.sigma2_sequence) {
        z.push_back(on_kbar.integral(Weight::gaussian(s2)));
    }

    WarmnessLedger ledger;
    for (std::size_t k = 0; k + 1 < schedule.sigma2_sequence.size(); ++k) {
        const double a = schedule.sigma2_sequence[k];
        const double b = schedule.sigma2_sequence[k + 1];
        double best = 0.0;
        for (const Vector& x : points) {
            const double r2 = x.squaredNorm();
            best = std::max(best, std::exp(-r2 / (2.0 * a) + r2 / (2.0 * b)) * z[k + 1] / z[k]);
        }
        ledger.stages.push_back({schedule.phases[k + 1], a, b, best});
    }

    const double vol_kbar = on_kbar.volume();
    const double top = schedule.sigma2_sequence.back();
    for (const Vector& x : points) {
        ledger.phase4_ratio = std::max(
            ledger.phase4_ratio, vol_kbar * std::exp(-x.squaredNorm() / (2.0 * top)) / z.back());
    }

    // Unif(B_1) / mu_1 is radial and increasing in |x|; sample radii in [0, 1].
    const double s1 = schedule.sigma2_sequence.front();
    for (int i = 0; i < grid_per_axis; ++i) {
        const double r = static_cast<double>(i) / (grid_per_axis - 1);
        ledger.phase1_ratio =
            std::max(ledger.phase1_ratio,
                     z.front() * std::exp(r * r / (2.0 * s1)) / unit_ball_volume(d));
    }

    ledger.truncation_mass = vol_kbar / on_body.volume();
    return ledger;
}

/// Phase I ratio sup_{B_1} Unif(B_1) / N(0, I/d)|_Kbar for a box that lies
/// inside the truncation ball, in any dimension (closed form Gaussian mass).
inline double phase1_ratio_box(const Vector& lo, const Vector& hi, double L)
{
    const int d = static_cast<int>(lo.size());
    const double corner = lo.cwiseAbs().cwiseMax(hi.cwiseAbs()).norm();
    require(corner <= L * std::sqrt(static_cast<double>(d)),
            "box must lie inside the truncation ball");
    const double s1 = 1.0 / d;
    const double z = box_gaussian_integral(lo, hi, s1);
    double best = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double r = i / 1000.0;
        best = std::max(best, z * std::exp(r * r / (2.0 * s1)) / unit_ball_volume(d));
    }
    return best;
}

}  // namespace proxsampler::verify
