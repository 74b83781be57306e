// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numbers>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "proxsampler/annealing.hpp"
#include "proxsampler/parallel.hpp"
#include "proxsampler/sampler.hpp"
#include "proxsampler/verify/chain.hpp"
#include "proxsampler/verify/gof.hpp"
#include "proxsampler/verify/grid.hpp"
#include "proxsampler/verify/quadrature.hpp"
#include "proxsampler/verify/scaling.hpp"
#include "proxsampler/verify/stats.hpp"
#include "proxsampler/verify/warmness.hpp"

using namespace proxsampler;
using namespace proxsampler::verify;

namespace {

// Pinned tolerances and budgets.
constexpr double kBoostTol = 1e-10;
constexpr double kAlpha = 0.01;
constexpr double kMixingTv = 0.05;
constexpr double kCoolingTv = 0.1;
constexpr double kWarmSlack = 1e-6;
constexpr double kSlopeLo = 2.3;
constexpr double kSlopeHi = 3.8;
constexpr double kEta = 0.1;

struct Outcome
{
    bool pass = false;
    std::string detail;
};

unsigned jobs() { return std::max(1u, std::thread::hardware_concurrency()); }

Vector uniform_in_box(const Vector& lo, const Vector& hi, RandomStream& rng)
{
    Vector x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        x[i] = lo[i] + (hi[i] - lo[i]) * rng.uniform();
    }
    return x;
}

// N(0, s2 I) restricted to the box [lo, hi], by per-coordinate rejection.
Vector gaussian_in_box(const Vector& lo, const Vector& hi, double s2, RandomStream& rng)
{
    Vector x(lo.size());
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        do {
            x[i] = std::sqrt(s2) * rng.gaussian();
        } while (x[i] < lo[i] || x[i] > hi[i]);
    }
    return x;
}

std::vector<double> random_probability(std::size_t m, RandomStream& rng, double floor)
{
    std::vector<double> p(m);
    double s = 0.0;
    for (auto& v : p) {
        v = floor + rng.uniform_positive();
        s += v;
    }
    for (auto& v : p) {
        v /= s;
    }
    return p;
}

std::string fmt(const char* f, ...)
{
    char buf[512];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

//---------------------------------------------------------------------------//

Outcome criterion1()
{
    RandomStream rng(1001, 0);
    int checks = 0, violations = 0;
    double worst = -INFINITY;
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index m = 2 + static_cast<Eigen::Index>(rng.uniform() * 19);
        const auto p = random_probability(static_cast<std::size_t>(m), rng, 0.05);
        const Eigen::VectorXd pi = Eigen::Map<const Eigen::VectorXd>(p.data(), m);
        Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = i + 1; j < m; ++j) {
                Q(i, j) = Q(j, i) = rng.uniform();
            }
        }
        Q /= Q.rowwise().sum().maxCoeff() * (1.0 + 1e-9);
        const DiscreteChain chain = metropolis_chain(pi, Q);
        for (int s = 0; s < 5; ++s) {
            const auto mu = random_probability(static_cast<std::size_t>(m), rng, 0.0);
            const Eigen::VectorXd mu0 = Eigen::Map<const Eigen::VectorXd>(mu.data(), m);
            for (int n = 0; n <= 50; ++n) {
                const BoostingResult r = boosting_check(chain, mu0, n);
                ++checks;
                violations += r.lhs <= r.rhs + kBoostTol ? 0 : 1;
                worst = std::max(worst, r.lhs - r.rhs);
            }
        }
    }
    return {violations == 0,
            fmt("%d checks, %d violations, max lhs - rhs = %.3g", checks, violations, worst)};
}

Outcome criterion2()
{
    constexpr int kChains = 100000;
    std::vector<GofReport> reports;
    for (bool gaussian : {false, true}) {
        for (int d : {1, 2}) {
            const BodySpec box = make_cube(d, 2.0);
            const Vector lo = Vector::Constant(d, -2.0), hi = Vector::Constant(d, 2.0);
            const TargetSpec target = gaussian ? TargetSpec::truncated_gaussian(box, 1.0)
                                               : TargetSpec::uniform(box);
            ProxParams p = gaussian ? plan_gaussian(d, 1.0, box.circumscribed_radius(), 1.0, kEta, 0.1)
                                    : plan_uniform(d, box.circumscribed_radius(), 1.0, kEta, 0.1);
            p.n = 1;
            RandomStream rng(2002, static_cast<std::uint64_t>(d + (gaussian ? 10 : 0)));
            std::vector<std::vector<double>> coords(static_cast<std::size_t>(d));
            for (int i = 0; i < kChains; ++i) {
                const Vector x0 = gaussian ? gaussian_in_box(lo, hi, 1.0, rng) : uniform_in_box(lo, hi, rng);
                const RunReport r = run_prox(target, p, x0, rng, RunOptions{false});
                if (r.failed) {
                    return {false, "a single-step chain failed"};
                }
                for (int k = 0; k < d; ++k) {
                    coords[static_cast<std::size_t>(k)].push_back((*r.final_point)[k]);
                }
            }
            for (int k = 0; k < d; ++k) {
                std::function<double(double)> cdf =
                    gaussian ? std::function<double(double)>([](double t) { return truncated_normal_cdf(t, 0.0, 1.0, -2.0, 2.0); })
                             : std::function<double(double)>([](double t) { return std::clamp((t + 2.0) / 4.0, 0.0, 1.0); });
                reports.push_back(ks_test(fmt("%s d=%d x%d", gaussian ? "gauss" : "unif", d, k),
                                          coords[static_cast<std::size_t>(k)], cdf));
            }
        }
    }
    const double cut = kAlpha / static_cast<double>(reports.size());
    double min_p = 1.0;
    for (const auto& r : reports) {
        min_p = std::min(min_p, r.p_value);
    }
    return {min_p > cut, fmt("%zu KS tests, min p = %.4f (cut %.5f)", reports.size(), min_p, cut)};
}

Outcome criterion3()
{
    const BodySpec k = make_cube(1, 2.0);
    RandomStream rng(3003, 0);
    std::vector<double> u, g;
    for (int i = 0; i < 100000; ++i) {
        QueryLedger ledger;
        const auto x = backward_step_uniform(Vector::Constant(1, 1.9), 1.0, 1u << 20, k, rng, ledger);
        const auto y = backward_step_gaussian(Vector::Constant(1, 0.8), 0.5, 1.0, 1u << 20, k, rng, ledger);
        if (!x || !y) {
            return {false, "backward step failed"};
        }
        u.push_back((*x)[0]);
        g.push_back((*y)[0]);
    }
    const double gm = 0.8 / 1.5, gv = 0.5 / 1.5;
    const GofReport ru = ks_test("uniform", u, [](double t) { return truncated_normal_cdf(t, 1.9, 1.0, -2.0, 2.0); });
    const GofReport rg = ks_test("gaussian", g, [&](double t) { return truncated_normal_cdf(t, gm, gv, -2.0, 2.0); });
    return {ru.p_value > kAlpha && rg.p_value > kAlpha,
            fmt("uniform-kernel p = %.4f, gaussian-kernel p = %.4f", ru.p_value, rg.p_value)};
}

// 10^3 seeds x 10^3 chains; chain c of seed s uses RandomStream(s, c). The
// start law is the target restricted to x1 <= 0, which is exactly 2-warm.
template <class Start>
std::vector<Vector> desk_chains(const TargetSpec& target, const ProxParams& p, Start start,
                                std::uint64_t seed_base, std::size_t& failures)
{
    constexpr std::size_t kSeeds = 1000, kChains = 1000;
    std::vector<Vector> finals(kSeeds * kChains);
    std::vector<char> failed(finals.size(), 0);
    parallel_for(kSeeds, jobs(), [&](std::size_t s) {
        for (std::size_t c = 0; c < kChains; ++c) {
            RandomStream rng(seed_base + s, c);
            const RunReport r = run_prox(target, p, start(rng), rng, RunOptions{false});
            if (r.failed) {
                failed[s * kChains + c] = 1;
            } else {
                finals[s * kChains + c] = *r.final_point;
            }
        }
    });
    std::vector<Vector> out;
    out.reserve(finals.size());
    failures = 0;
    for (std::size_t i = 0; i < finals.size(); ++i) {
        if (failed[i]) {
            ++failures;
        } else {
            out.push_back(std::move(finals[i]));
        }
    }
    return out;
}

Outcome criterion4()
{
    const BodySpec box = make_cube(2, 2.0);
    const double eta = 0.05;
    const ProxParams p = plan_uniform(2, box.circumscribed_radius(), 2.0, eta, 0.1);
    const Vector lo = Eigen::Vector2d(-2, -2), hi = Eigen::Vector2d(0, 2);
    std::size_t failures = 0;
    const auto samples = desk_chains(TargetSpec::uniform(box), p,
                                     [&](RandomStream& rng) { return uniform_in_box(lo, hi, rng); },
                                     40000, failures);
    const Edges edges{uniform_edges(-2, 2, 20), uniform_edges(-2, 2, 20)};
    const GridHistogram h = grid_from_samples(samples, edges);
    const std::vector<double> uniform(400, 1.0 / 400.0);
    const double tv = tv_distance(h.density.mass, uniform);
    return {tv <= kMixingTv && h.out_of_bounds == 0,
            fmt("grid TV = %.5f (<= %.2f), n = %llu, h = %.6g, %zu samples, %zu failures",
                tv, kMixingTv, static_cast<unsigned long long>(p.n), p.h, samples.size(), failures)};
}

Outcome criterion5()
{
    const BodySpec box = make_cube(2, 2.0);
    const double eta = 0.05;
    const ProxParams p = plan_gaussian(2, 1.0, box.circumscribed_radius(), 2.0, eta, 0.1);
    const Vector lo = Eigen::Vector2d(-2, -2), hi = Eigen::Vector2d(0, 2);
    std::size_t failures = 0;
    const auto samples = desk_chains(TargetSpec::truncated_gaussian(box, 1.0), p,
                                     [&](RandomStream& rng) { return gaussian_in_box(lo, hi, 1.0, rng); },
                                     50000, failures);
    const auto cdf = [](double t) { return truncated_normal_cdf(t, 0.0, 1.0, -2.0, 2.0); };
    double min_p = 1.0;
    for (int k = 0; k < 2; ++k) {
        std::vector<double> c;
        c.reserve(samples.size());
        for (const auto& x : samples) {
            c.push_back(x[k]);
        }
        min_p = std::min(min_p, ks_test("x", c, cdf).p_value);
    }
    return {min_p > kAlpha / 2.0,
            fmt("marginal KS min p = %.4f (cut %.3f), n = %llu, %zu samples, %zu failures", min_p,
                kAlpha / 2.0, static_cast<unsigned long long>(p.n), samples.size(), failures)};
}

// C from the analytic second moment: E|X|^2 = d a^2 / 3 on [-a, a]^d and
// d R^2 / (d + 2) on the ball of radius R. C must be at least 1.
double box_C(double a) { return std::max(1.0, a / std::sqrt(3.0)); }
double ball_C(int d, double R) { return std::max(1.0, R / std::sqrt(d + 2.0)); }

Outcome criterion6()
{
    const double cap = std::sqrt(std::numbers::e) + kWarmSlack;
    struct Case
    {
        std::string name;
        BodySpec body;
        double C;
    };
    const std::vector<Case> cases{{"box1", make_cube(1, 2.0), box_C(2.0)},
                                  {"box2", make_cube(2, 2.0), box_C(2.0)},
                                  {"ball2", make_ball(2, 2.0), ball_C(2, 2.0)}};
    bool ok = true;
    std::string detail;
    for (const auto& c : cases) {
        CoolingConfig cfg;
        cfg.C = c.C;
        cfg.eps = 0.5;
        cfg.eta = kEta;
        const WarmnessLedger w = audit_warmness(c.body, cfg);
        const double d = c.body.dim();
        const bool here = w.max_stage_ratio() <= cap && w.phase4_ratio <= cap
                          && w.phase1_ratio <= 3.0 * std::sqrt(d)
                          && w.truncation_mass >= 1.0 - cfg.eps / 3.0;
        ok = ok && here;
        detail += fmt("%s: stage %.4f, IV %.4f, I %.3f, mass %.4f; ", c.name.c_str(),
                      w.max_stage_ratio(), w.phase4_ratio, w.phase1_ratio, w.truncation_mass);
    }
    return {ok, detail + fmt("cap %.7f", cap)};
}

struct CoolingTally
{
    std::size_t runs = 0;
    std::size_t failures = 0;
};

CoolingTally g_tally;

Outcome criterion7()
{
    struct Case
    {
        std::string name;
        BodySpec body;
        double C;
        std::size_t replicas;  // per seed
    };
    const std::vector<Case> cases{{"box d=2", make_cube(2, 2.0), box_C(2.0), 100},
                                  {"ball d=2", make_ball(2, 2.0), ball_C(2, 2.0), 100},
                                  {"box d=3", make_cube(3, 2.0), box_C(2.0), 10},
                                  {"ball d=3", make_ball(3, 2.0), ball_C(3, 2.0), 10}};
    bool ok = true;
    std::string detail;
    g_tally = {};
    for (const auto& c : cases) {
        CoolingConfig cfg;
        cfg.C = c.C;
        cfg.eps = 0.5;
        cfg.eta = kEta;
        constexpr std::size_t kSeeds = 100;
        std::vector<std::optional<Vector>> finals(kSeeds * c.replicas);
        parallel_for(kSeeds, jobs(), [&](std::size_t s) {
            for (std::size_t r = 0; r < c.replicas; ++r) {
                RandomStream rng(7000 + s, r);
                finals[s * c.replicas + r] = run_cooling(c.body, cfg, rng).final_point;
            }
        });
        std::size_t primary_success = 0, failures = 0;
        std::vector<Vector> pooled;
        for (std::size_t s = 0; s < kSeeds; ++s) {
            for (std::size_t r = 0; r < c.replicas; ++r) {
                const auto& f = finals[s * c.replicas + r];
                if (f) {
                    pooled.push_back(*f);
                    primary_success += r == 0 ? 1 : 0;
                } else {
                    ++failures;
                }
            }
        }
        g_tally.runs += finals.size();
        g_tally.failures += failures;
        const GofSuite suite = gof_suite(pooled, TargetSpec::uniform(c.body));
        bool here = primary_success >= 90 && suite.passes(kAlpha);
        detail += fmt("%s: %zu/100 ok, gof min p %.4f over %zu tests (%zu samples)",
                      c.name.c_str(), primary_success, suite.min_p_value(), suite.reports.size(),
                      pooled.size());
        if (c.body.dim() == 2) {
            const Edges edges{uniform_edges(-2, 2, 10), uniform_edges(-2, 2, 10)};
            const GridDensity ref = reference_grid(c.body, Weight::uniform(), edges);
            const GridHistogram h = grid_from_samples(pooled, edges);
            const double tv = tv_distance(h.density.mass, ref.mass);
            here = here && tv <= kCoolingTv && h.out_of_bounds == 0;
            detail += fmt(", grid TV %.4f", tv);
        }
        detail += "; ";
        ok = ok && here;
    }
    return {ok, detail};
}

Outcome criterion8()
{
    const double a = 2.0;
    CoolingConfig cfg;
    cfg.C = box_C(a);
    cfg.eps = 0.5;
    cfg.eta = kEta;
    const std::vector<int> dims{2, 4, 8, 16};
    constexpr std::size_t kSeeds = 5;
    std::vector<ScalingPoint> points(dims.size() * kSeeds);
    std::vector<char> failed(points.size(), 0);
    parallel_for(points.size(), jobs(), [&](std::size_t k) {
        const int d = dims[k / kSeeds];
        RandomStream rng(8000 + k % kSeeds, 0);
        const CoolingReport r = run_cooling(make_cube(d, a), cfg, rng);
        points[k] = {d, static_cast<double>(r.total_queries), r.wall_seconds};
        failed[k] = r.failed ? 1 : 0;
    });
    std::string table = "table d,seed,queries,seconds,failed:";
    std::vector<ScalingPoint> good;
    for (std::size_t k = 0; k < points.size(); ++k) {
        table += fmt(" %d,%zu,%.0f,%.2f,%d", points[k].d, k % kSeeds, points[k].queries,
                     points[k].wall_seconds, failed[k]);
        if (!failed[k]) {
            good.push_back(points[k]);
        }
    }
    std::printf("  %s\n", table.c_str());
    const ScalingFit fit = query_scaling_fit(good);
    return {fit.slope >= kSlopeLo && fit.slope <= kSlopeHi,
            fmt("slope %.4f in [%.1f, %.1f], r2 %.4f, %zu/%zu runs used", fit.slope, kSlopeLo,
                kSlopeHi, fit.r2, good.size(), points.size())};
}

Outcome criterion9()
{
    if (g_tally.runs == 0) {
        const Outcome o = criterion7();
        (void)o;
    }
    const double rate = static_cast<double>(g_tally.failures) / static_cast<double>(g_tally.runs);
    const double bound = kEta + 3.0 * std::sqrt(kEta / 100.0);
    return {rate <= bound, fmt("failure rate %.4f over %zu cooling runs (<= %.4f)", rate,
                               g_tally.runs, bound)};
}

Outcome criterion10()
{
    RandomStream rng(10010, 0);
    int hierarchy_bad = 0, dpi_bad = 0, conservation_bad = 0, feasibility_bad = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t m = 2 + static_cast<std::size_t>(rng.uniform() * 60);
        const auto mu = random_probability(m, rng, 0.0);
        const auto pi = random_probability(m, rng, 0.0);
        try {
            const DivergenceEstimates e = divergence_estimates(mu, pi);
            hierarchy_bad += hierarchy_holds(e) ? 0 : 1;
        } catch (const std::logic_error&) {
            ++hierarchy_bad;
        }
        Eigen::MatrixXd P(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (Eigen::Index i = 0; i < P.rows(); ++i) {
            const auto row = random_probability(m, rng, 0.0);
            for (Eigen::Index j = 0; j < P.cols(); ++j) {
                P(i, j) = row[static_cast<std::size_t>(j)];
            }
        }
        const auto muP = push_forward(mu, P), piP = push_forward(pi, P);
        for (double q : {1.5, 2.0, std::numeric_limits<double>::infinity()}) {
            dpi_bad += renyi_divergence(muP, piP, q) <= renyi_divergence(mu, pi, q) + 1e-12 ? 0 : 1;
        }
    }
    const std::vector<BodySpec> bodies{make_cube(3, 2.0), make_ball(4, 1.5),
                                       make_ellipsoid(Eigen::Vector3d(1, 2, 3)),
                                       make_intersection({make_cube(2, 2.0), make_ball(2, 2.5)})};
    for (const auto& b : bodies) {
        for (std::uint64_t n : {1u, 10u, 200u}) {
            const RunReport r = run_prox(TargetSpec::uniform(b), ProxParams{0.05, 1000000, n, 1.0, 0.5, 0.5},
                                         Vector::Zero(b.dim()), rng);
            std::uint64_t sum = 0;
            for (auto x : r.ledger.per_iteration_trials) {
                sum += x;
            }
            conservation_bad += sum == r.ledger.total_queries ? 0 : 1;
            feasibility_bad += (!r.failed && b.holds(*r.final_point)) ? 0 : 1;
        }
    }
    const GaussianProposal g = gaussian_backward_proposal(0.3, 1e12);
    const double limit_err = std::max(std::abs(g.mean_factor - 1.0), std::abs(g.variance - 0.3) / 0.3);
    const bool ok = hierarchy_bad == 0 && dpi_bad == 0 && conservation_bad == 0
                    && feasibility_bad == 0 && limit_err <= 1e-10;
    return {ok, fmt("hierarchy %d, data-processing %d, conservation %d, feasibility %d bad; "
                    "flat-limit error %.2g",
                    hierarchy_bad, dpi_bad, conservation_bad, feasibility_bad, limit_err)};
}

struct Criterion
{
    int id;
    const char* name;
    double budget_seconds;
    Outcome (*run)();
};

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all{
        {1, "boosting inequality on finite chains", 10, criterion1},
        {2, "one-step stationarity of both kernels", 120, criterion2},
        {3, "backward-step conditional law", 60, criterion3},
        {4, "prox-uniform mixing at desk scale", 600, criterion4},
        {5, "prox-Gaussian mixing at desk scale", 600, criterion5},
        {6, "warmness ledger of the schedule", 60, criterion6},
        {7, "end-to-end cooling correctness", 1800, criterion7},
        {8, "query scaling", 7200, criterion8},
        {9, "failure budget", 1800, criterion9},
        {10, "property suites", 60, criterion10},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) {
        selected.insert(std::stoi(argv[i]));
    }
    int failures = 0;
    for (const auto& c : all) {
        if (!selected.empty() && !selected.count(c.id)) {
            continue;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.budget_seconds;
        const bool pass = o.pass && in_time;
        failures += pass ? 0 : 1;
        std::printf("[%s] criterion %d: %s | %s | %.1f s (budget %.0f s)\n", pass ? "PASS" : "FAIL",
                    c.id, c.name, o.detail.c_str(), secs, c.budget_seconds);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
