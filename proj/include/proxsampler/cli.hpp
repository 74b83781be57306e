// SPDX-License-Identifier: Apache-2.0
//
// The proxsample command line front end.
//
//   proxsample sample-uniform  --body K.json [--n --h --N | --M --eta --eps]
//   proxsample sample-gaussian --body K.json --sigma2 S [...]
//   proxsample cool            --body K.json --C C [--eps --eta --retry abort|retry-phase:K]
//   proxsample verify          --body K.json --samples S.jsonl [--sigma2 S]
//   proxsample bench           [--dims 2,4,8,16 --half-width 2 --C --eps --eta]
//
// Replica r of a run always uses RandomStream(seed, r), so outputs do not
// depend on --jobs. Samples go to --out (stdout when absent) in original body
// coordinates; the JSON report goes to --report. Reports hold sampler state in
// working coordinates, which differ from the original ones only when the body
// was rescaled to unit inradius ("scale" field).
//
// Exit codes: 0 success, 1 usage or input error, 2 sampler Failure in some
// replica (or, for verify, a rejected goodness-of-fit suite).

#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "proxsampler/annealing.hpp"
#include "proxsampler/error.hpp"
#include "proxsampler/geometry.hpp"
#include "proxsampler/io.hpp"
#include "proxsampler/parallel.hpp"
#include "proxsampler/random.hpp"
#include "proxsampler/sampler.hpp"
#include "proxsampler/verify/gof.hpp"
#include "proxsampler/verify/grid.hpp"
#include "proxsampler/verify/quadrature.hpp"
#include "proxsampler/verify/scaling.hpp"

namespace proxsampler::cli {

using io::json;

//---------------------------------------------------------------------------//
// Report documents
//---------------------------------------------------------------------------//

struct SampleBatch
{
    TargetKind kind = TargetKind::uniform;
    /// sigma2 in original coordinates (0 for uniform targets).
    double sigma2 = 0.0;
    std::uint64_t seed = 0;
    BodySpec body = make_ball(1, 1.0);
    double scale = 1.0;
    TuningConstants tuning;
    ProxParams params;
    std::vector<RunReport> runs;

    bool operator==(const SampleBatch&) const = default;
};

inline json to_json(const SampleBatch& b)
{
    json runs = json::array();
    for (const auto& r : b.runs) {
        runs.push_back(io::to_json(r));
    }
    return {{"command", b.kind == TargetKind::uniform ? "sample-uniform" : "sample-gaussian"},
            {"sigma2", b.sigma2},
            {"seed", b.seed},
            {"replicas", b.runs.size()},
            {"body", io::body_to_json(b.body)},
            {"scale", b.scale},
            {"tuning", io::to_json(b.tuning)},
            {"params", io::to_json(b.params)},
            {"runs", runs}};
}

inline SampleBatch sample_batch_from_json(const json& j)
{
    SampleBatch b;
    const std::string command = io::detail::field(j, "command").get<std::string>();
    if (command != "sample-uniform" && command != "sample-gaussian") {
        throw io::FormatError("not a sample report");
    }
    b.kind = command == "sample-uniform" ? TargetKind::uniform : TargetKind::truncated_gaussian;
    b.sigma2 = io::detail::number(j, "sigma2");
    b.seed = io::detail::count(j, "seed");
    b.body = io::body_from_json(io::detail::field(j, "body"));
    b.scale = io::detail::number(j, "scale");
    b.tuning = io::tuning_from_json(io::detail::field(j, "tuning"));
    b.params = io::params_from_json(io::detail::field(j, "params"));
    for (const auto& r : io::detail::field(j, "runs")) {
        b.runs.push_back(io::run_report_from_json(r));
    }
    if (b.runs.size() != io::detail::count(j, "replicas")) {
        throw io::FormatError("replica count does not match the runs");
    }
    return b;
}

struct CoolingBatch
{
    std::uint64_t seed = 0;
    BodySpec body = make_ball(1, 1.0);
    double scale = 1.0;
    /// Config in working coordinates (C is divided by scale).
    CoolingConfig config;
    std::vector<CoolingReport> runs;

    bool operator==(const CoolingBatch& o) const
    {
        return seed == o.seed && body == o.body && scale == o.scale && config.C == o.config.C
               && config.eps == o.config.eps && config.eta == o.config.eta
               && config.tuning == o.config.tuning && config.retry == o.config.retry
               && config.record_trials == o.config.record_trials && runs == o.runs;
    }
};

inline json to_json(const CoolingBatch& b)
{
    json runs = json::array();
    for (const auto& r : b.runs) {
        runs.push_back(io::to_json(r));
    }
    return {{"command", "cool"},
            {"seed", b.seed},
            {"replicas", b.runs.size()},
            {"body", io::body_to_json(b.body)},
            {"scale", b.scale},
            {"config",
             {{"C", b.config.C},
              {"eps", b.config.eps},
              {"eta", b.config.eta},
              {"tuning", io::to_json(b.config.tuning)},
              {"retry", io::to_json(b.config.retry)},
              {"record_trials", b.config.record_trials}}},
            {"runs", runs}};
}

inline CoolingBatch cooling_batch_from_json(const json& j)
{
    if (io::detail::field(j, "command").get<std::string>() != "cool") {
        throw io::FormatError("not a cooling report");
    }
    CoolingBatch b;
    b.seed = io::detail::count(j, "seed");
    b.body = io::body_from_json(io::detail::field(j, "body"));
    b.scale = io::detail::number(j, "scale");
    const json& c = io::detail::field(j, "config");
    b.config.C = io::detail::number(c, "C");
    b.config.eps = io::detail::number(c, "eps");
    b.config.eta = io::detail::number(c, "eta");
    b.config.tuning = io::tuning_from_json(io::detail::field(c, "tuning"));
    b.config.retry = io::retry_from_json(io::detail::field(c, "retry"));
    b.config.record_trials = io::detail::field(c, "record_trials").get<bool>();
    for (const auto& r : io::detail::field(j, "runs")) {
        b.runs.push_back(io::cooling_report_from_json(r));
    }
    if (b.runs.size() != io::detail::count(j, "replicas")) {
        throw io::FormatError("replica count does not match the runs");
    }
    return b;
}

struct BenchRow
{
    int d = 0;
    std::uint64_t replica = 0;
    std::uint64_t total_queries = 0;
    double wall_seconds = 0.0;
    bool failed = false;

    bool operator==(const BenchRow&) const = default;
};

struct BenchReport
{
    std::uint64_t seed = 0;
    double half_width = 2.0;
    double C = 1.0;
    double eps = 0.5;
    double eta = 0.1;
    TuningConstants tuning;
    std::vector<BenchRow> rows;
    std::optional<verify::ScalingFit> fit;

    bool operator==(const BenchReport& o) const
    {
        const bool fits_equal = fit.has_value() == o.fit.has_value()
                                && (!fit || (fit->slope == o.fit->slope
                                             && fit->intercept == o.fit->intercept
                                             && fit->r2 == o.fit->r2));
        return seed == o.seed && half_width == o.half_width && C == o.C && eps == o.eps
               && eta == o.eta && tuning == o.tuning && rows == o.rows && fits_equal;
    }
};

inline json to_json(const BenchReport& b)
{
    json rows = json::array();
    for (const auto& r : b.rows) {
        rows.push_back({{"d", r.d},
                        {"replica", r.replica},
                        {"total_queries", r.total_queries},
                        {"wall_seconds", r.wall_seconds},
                        {"failed", r.failed}});
    }
    json fit = nullptr;
    if (b.fit) {
        fit = {{"slope", b.fit->slope}, {"intercept", b.fit->intercept}, {"r2", b.fit->r2}};
    }
    return {{"command", "bench"}, {"seed", b.seed}, {"half_width", b.half_width},
            {"C", b.C},           {"eps", b.eps},   {"eta", b.eta},
            {"tuning", io::to_json(b.tuning)},      {"rows", rows},
            {"fit", fit}};
}

inline BenchReport bench_report_from_json(const json& j)
{
    if (io::detail::field(j, "command").get<std::string>() != "bench") {
        throw io::FormatError("not a bench report");
    }
    BenchReport b;
    b.seed = io::detail::count(j, "seed");
    b.half_width = io::detail::number(j, "half_width");
    b.C = io::detail::number(j, "C");
    b.eps = io::detail::number(j, "eps");
    b.eta = io::detail::number(j, "eta");
    b.tuning = io::tuning_from_json(io::detail::field(j, "tuning"));
    for (const auto& r : io::detail::field(j, "rows")) {
        b.rows.push_back({static_cast<int>(io::detail::count(r, "d")), io::detail::count(r, "replica"),
                          io::detail::count(r, "total_queries"), io::detail::number(r, "wall_seconds"),
                          io::detail::field(r, "failed").get<bool>()});
    }
    const json& fit = io::detail::field(j, "fit");
    if (!fit.is_null()) {
        b.fit = verify::ScalingFit{io::detail::number(fit, "slope"), io::detail::number(fit, "intercept"),
                                   io::detail::number(fit, "r2")};
    }
    return b;
}

struct VerifyReport
{
    TargetKind kind = TargetKind::uniform;
    double sigma2 = 0.0;
    std::uint64_t sample_size = 0;
    bool supported = false;
    std::string reason;
    double alpha = 0.01;
    bool passed = false;
    std::vector<verify::GofReport> reports;
    /// Grid total variation against the quadrature reference (d <= 2).
    std::optional<double> grid_tv;
    int grid_cells = 0;
    std::uint64_t grid_out_of_bounds = 0;

    bool operator==(const VerifyReport& o) const
    {
        if (reports.size() != o.reports.size()) {
            return false;
        }
        for (std::size_t i = 0; i < reports.size(); ++i) {
            const auto& a = reports[i];
            const auto& b = o.reports[i];
            if (a.statistic_name != b.statistic_name || a.statistic_value != b.statistic_value
                || a.p_value != b.p_value || a.sample_size != b.sample_size) {
                return false;
            }
        }
        return kind == o.kind && sigma2 == o.sigma2 && sample_size == o.sample_size
               && supported == o.supported && reason == o.reason && alpha == o.alpha
               && passed == o.passed && grid_tv == o.grid_tv && grid_cells == o.grid_cells
               && grid_out_of_bounds == o.grid_out_of_bounds;
    }
};

inline json to_json(const VerifyReport& v)
{
    json reports = json::array();
    for (const auto& r : v.reports) {
        reports.push_back({{"statistic_name", r.statistic_name},
                           {"statistic_value", r.statistic_value},
                           {"p_value", r.p_value},
                           {"sample_size", r.sample_size}});
    }
    return {{"command", "verify"},
            {"target", v.kind == TargetKind::uniform ? "uniform" : "truncated_gaussian"},
            {"sigma2", v.sigma2},
            {"sample_size", v.sample_size},
            {"supported", v.supported},
            {"reason", v.reason},
            {"alpha", v.alpha},
            {"passed", v.passed},
            {"reports", reports},
            {"grid_tv", v.grid_tv ? json(*v.grid_tv) : json(nullptr)},
            {"grid_cells", v.grid_cells},
            {"grid_out_of_bounds", v.grid_out_of_bounds}};
}

inline VerifyReport verify_report_from_json(const json& j)
{
    if (io::detail::field(j, "command").get<std::string>() != "verify") {
        throw io::FormatError("not a verify report");
    }
    VerifyReport v;
    v.kind = io::detail::field(j, "target").get<std::string>() == "uniform"
                 ? TargetKind::uniform
                 : TargetKind::truncated_gaussian;
    v.sigma2 = io::detail::number(j, "sigma2");
    v.sample_size = io::detail::count(j, "sample_size");
    v.supported = io::detail::field(j, "supported").get<bool>();
    v.reason = io::detail::field(j, "reason").get<std::string>();
    v.alpha = io::detail::number(j, "alpha");
    v.passed = io::detail::field(j, "passed").get<bool>();
    for (const auto& r : io::detail::field(j, "reports")) {
        v.reports.push_back({io::detail::field(r, "statistic_name").get<std::string>(),
                             io::detail::number(r, "statistic_value"),
                             io::detail::number(r, "p_value"),
                             static_cast<std::size_t>(io::detail::count(r, "sample_size"))});
    }
    if (!io::detail::field(j, "grid_tv").is_null()) {
        v.grid_tv = io::detail::number(j, "grid_tv");
    }
    v.grid_cells = static_cast<int>(io::detail::count(j, "grid_cells"));
    v.grid_out_of_bounds = io::detail::count(j, "grid_out_of_bounds");
    return v;
}

//---------------------------------------------------------------------------//
// Defaults
//---------------------------------------------------------------------------//

/// Warmness of Unif(B_1) with respect to Unif(K): vol(K) / vol(B_1) <= D^d.
inline double unit_ball_warmness_uniform(int d, double D) { return std::max(1.0, std::pow(D, d)); }

/// Warmness of Unif(B_1) with respect to N(0, s2 I)|_K:
/// sup_{B_1} Z e^{|x|^2 / (2 s2)} / vol(B_1) with Z <= min((2 pi s2)^{d/2}, vol(B_D)).
inline double unit_ball_warmness_gaussian(int d, double sigma2, double D)
{
    const double dd = d;
    const double vol_b1 = std::pow(std::numbers::pi, dd / 2.0) / std::tgamma(dd / 2.0 + 1.0);
    const double z = std::min(std::pow(2.0 * std::numbers::pi * sigma2, dd / 2.0), vol_b1 * std::pow(D, dd));
    return std::max(1.0, z * std::exp(1.0 / (2.0 * sigma2)) / vol_b1);
}

//---------------------------------------------------------------------------//
// Command line
//---------------------------------------------------------------------------//

class UsageError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

struct Options
{
    std::string command;
    std::string body_path;
    std::string samples_path;
    std::string out_path;
    std::string report_path;
    std::string format = "jsonl";
    std::string retry = "abort";
    std::string trials;
    std::string init;
    std::string dims = "2,4,8,16";
    std::uint64_t seed = 0;
    unsigned replicas = 1;
    unsigned jobs = 1;
    double eps = 0.0;
    double eta = 0.1;
    double sigma2 = 0.0;
    double C = 0.0;
    double M = 0.0;
    double h = 0.0;
    std::uint64_t n = 0;
    std::uint64_t N = 0;
    double half_width = 2.0;
    int cells = 20;
    TuningConstants tuning;

    // Which fields were given (by flag or config file).
    bool has_eps = false, has_sigma2 = false, has_C = false, has_M = false, has_h = false,
         has_n = false, has_N = false, has_replicas = false;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const char* what)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(cell, &used));
            if (used != cell.size()) {
                throw std::invalid_argument(cell);
            }
        } catch (const std::exception&) {
            throw UsageError(std::string("bad number in ") + what + ": \"" + cell + "\"");
        }
    }
    if (out.empty()) {
        throw UsageError(std::string(what) + " is empty");
    }
    return out;
}

inline RetryPolicy parse_retry(const std::string& s)
{
    if (s == "abort") {
        return RetryPolicy::abort();
    }
    const std::string prefix = "retry-phase";
    if (s.rfind(prefix, 0) == 0) {
        if (s.size() == prefix.size()) {
            return RetryPolicy::retry_phase(1);
        }
        if (s[prefix.size()] == ':') {
            try {
                const int k = std::stoi(s.substr(prefix.size() + 1));
                if (k >= 0) {
                    return RetryPolicy::retry_phase(static_cast<unsigned>(k));
                }
            } catch (const std::exception&) {
            }
        }
    }
    throw UsageError("--retry must be abort or retry-phase:K");
}

/// Config file entries become flags placed before the user's own, so flags
/// given on the command line win.
inline std::vector<std::string> config_tokens(const std::string& path, Options& opt)
{
    const json cfg = io::parse_json(io::read_file(path), path);
    if (!cfg.is_object()) {
        throw UsageError(path + ": config must be a JSON object");
    }
    std::vector<std::string> tokens;
    for (auto it = cfg.begin(); it != cfg.end(); ++it) {
        const std::string& key = it.key();
        const json& v = *it;
        if (key == "tuning") {
            opt.tuning = io::tuning_from_json(v);
            continue;
        }
        if (key == "command") {
            tokens.insert(tokens.begin(), v.get<std::string>());
            continue;
        }
        std::string value;
        if (v.is_string()) {
            value = v.get<std::string>();
        } else if (v.is_number()) {
            value = v.dump();
        } else if (v.is_array()) {
            for (std::size_t i = 0; i < v.size(); ++i) {
                value += (i ? "," : "") + v[i].dump();
            }
        } else {
            throw UsageError(path + ": unsupported value for \"" + key + "\"");
        }
        tokens.push_back("--" + key);
        tokens.push_back(value);
    }
    return tokens;
}

inline std::ofstream open_output(const std::string& path)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        throw UsageError("cannot write " + path);
    }
    return f;
}

inline void write_report(const Options& opt, const json& doc)
{
    if (opt.report_path.empty()) {
        return;
    }
    std::ofstream f = open_output(opt.report_path);
    f << doc.dump(2) << '\n';
}

struct WorkingBody
{
    BodySpec original;
    BodySpec body;
    double scale = 1.0;
};

/// Bodies with inscribed radius below 1 are divided by it.
inline WorkingBody load_working_body(const Options& opt)
{
    if (opt.body_path.empty()) {
        throw UsageError("--body is required");
    }
    BodySpec original = io::load_body(opt.body_path);
    if (original.inscribed_radius() < 1.0) {
        RescaledBody r = rescale_to_unit_inradius(original);
        return {original, r.body, r.scale};
    }
    return {original, original, 1.0};
}

template <class Points>
void emit_samples(const Options& opt, std::ostream& out, const Points& points, double scale)
{
    const io::SampleFormat format = io::parse_format(opt.format);
    std::ofstream file;
    std::ostream* dest = &out;
    if (!opt.out_path.empty()) {
        file = open_output(opt.out_path);
        dest = &file;
    }
    for (const auto& p : points) {
        if (p) {
            io::write_sample(*dest, *p * scale, format);
        }
    }
}

inline int sample_command(const Options& opt, std::ostream& out, std::ostream& err)
{
    const bool gaussian = opt.command == "sample-gaussian";
    if (gaussian && !opt.has_sigma2) {
        throw UsageError("sample-gaussian needs --sigma2");
    }
    if (!gaussian && opt.has_sigma2) {
        throw UsageError("--sigma2 applies to sample-gaussian only");
    }
    const WorkingBody wb = load_working_body(opt);
    const int d = wb.body.dim();
    const double s2 = gaussian ? opt.sigma2 / (wb.scale * wb.scale) : 0.0;
    const TargetSpec target = gaussian ? TargetSpec::truncated_gaussian(wb.body, s2)
                                       : TargetSpec::uniform(wb.body);

    std::optional<Vector> init;
    if (!opt.init.empty()) {
        const std::vector<double> v = parse_list(opt.init, "--init");
        if (static_cast<int>(v.size()) != d) {
            throw UsageError("--init has the wrong dimension");
        }
        init = Eigen::Map<const Vector>(v.data(), d) / wb.scale;
        if (!wb.body.holds(*init)) {
            throw UsageError("--init is not in the body");
        }
        if (!opt.has_M && !(opt.has_n && opt.has_h && opt.has_N)) {
            throw UsageError("--init needs --M (its warmness is unknown)");
        }
    }

    const double D = std::max(1.0, wb.body.circumscribed_radius());
    const double M = opt.has_M ? opt.M
                     : gaussian ? unit_ball_warmness_gaussian(d, s2, D)
                                : unit_ball_warmness_uniform(d, D);
    const double eps = opt.has_eps ? opt.eps : 0.1;

    ProxParams params;
    if (opt.has_n && opt.has_h && opt.has_N) {
        params.M = std::max(1.0, M);
        params.eta = opt.eta;
        params.eps = eps;
    } else {
        params = gaussian ? plan_gaussian(d, s2, D, M, opt.eta, eps, opt.tuning)
                          : plan_uniform(d, D, M, opt.eta, eps, opt.tuning);
    }
    if (opt.has_n) params.n = opt.n;
    if (opt.has_h) params.h = opt.h;
    if (opt.has_N) {
        params.N = opt.N;
        params.threshold_capped = false;
        params.threshold_uncapped = static_cast<double>(opt.N);
    }
    validate(params);
    if (params.threshold_capped) {
        err << "warning: rejection threshold capped at " << params.N << " (planner asked for "
            << params.threshold_uncapped << ")\n";
    }

    const bool full = opt.trials.empty() || opt.trials == "full";
    SampleBatch batch;
    batch.kind = target.kind;
    batch.sigma2 = gaussian ? opt.sigma2 : 0.0;
    batch.seed = opt.seed;
    batch.body = wb.original;
    batch.scale = wb.scale;
    batch.tuning = opt.tuning;
    batch.params = params;
    batch.runs.resize(opt.replicas);
    parallel_for(opt.replicas, opt.jobs, [&](std::size_t r) {
        RandomStream rng(opt.seed, r);
        const Vector start = init ? *init : sample_unit_ball(d, rng);
        batch.runs[r] = run_prox(target, params, start, rng, RunOptions{full});
    });

    std::vector<std::optional<Vector>> points;
    std::size_t failures = 0;
    for (const auto& r : batch.runs) {
        points.push_back(r.final_point);
        failures += r.failed ? 1 : 0;
    }
    emit_samples(opt, out, points, wb.scale);
    write_report(opt, to_json(batch));
    if (failures > 0) {
        err << failures << " of " << opt.replicas << " replicas failed\n";
        return 2;
    }
    return 0;
}

inline int cool_command(const Options& opt, std::ostream& out, std::ostream& err)
{
    if (!opt.has_C) {
        throw UsageError("cool needs --C");
    }
    const WorkingBody wb = load_working_body(opt);
    CoolingBatch batch;
    batch.seed = opt.seed;
    batch.body = wb.original;
    batch.scale = wb.scale;
    batch.config.C = opt.C / wb.scale;
    batch.config.eps = opt.has_eps ? opt.eps : 0.5;
    batch.config.eta = opt.eta;
    batch.config.tuning = opt.tuning;
    batch.config.retry = parse_retry(opt.retry);
    batch.config.record_trials = opt.trials == "full";
    validate(batch.config);

    batch.runs.resize(opt.replicas);
    parallel_for(opt.replicas, opt.jobs, [&](std::size_t r) {
        RandomStream rng(opt.seed, r);
        batch.runs[r] = run_cooling(wb.body, batch.config, rng);
    });

    std::vector<std::optional<Vector>> points;
    std::size_t failures = 0;
    for (const auto& r : batch.runs) {
        points.push_back(r.final_point);
        failures += r.failed ? 1 : 0;
    }
    emit_samples(opt, out, points, wb.scale);
    write_report(opt, to_json(batch));
    if (failures > 0) {
        err << failures << " of " << opt.replicas << " cooling runs failed\n";
        return 2;
    }
    return 0;
}

inline int verify_command(const Options& opt, std::ostream& out, std::ostream& err)
{
    if (opt.samples_path.empty()) {
        throw UsageError("verify needs --samples");
    }
    if (opt.body_path.empty()) {
        throw UsageError("--body is required");
    }
    const BodySpec body = io::load_body(opt.body_path);
    const std::vector<Vector> samples = io::load_samples(opt.samples_path, io::parse_format(opt.format));
    if (samples.empty()) {
        throw UsageError("no samples in " + opt.samples_path);
    }
    const TargetSpec target = opt.has_sigma2 ? TargetSpec::truncated_gaussian(body, opt.sigma2)
                                             : TargetSpec::uniform(body);
    const verify::GofSuite suite = verify::gof_suite(samples, target);

    VerifyReport v;
    v.kind = target.kind;
    v.sigma2 = opt.has_sigma2 ? opt.sigma2 : 0.0;
    v.sample_size = samples.size();
    v.supported = suite.supported;
    v.reason = suite.reason;
    v.reports = suite.reports;
    v.passed = suite.passes(v.alpha);
    if (body.dim() <= 2) {
        const double D = body.circumscribed_radius();
        verify::Edges edges(static_cast<std::size_t>(body.dim()), verify::uniform_edges(-D, D, opt.cells));
        const verify::Weight w = opt.has_sigma2 ? verify::Weight::gaussian(opt.sigma2) : verify::Weight::uniform();
        const verify::GridDensity reference = verify::reference_grid(body, w, edges);
        const verify::GridHistogram hist = verify::grid_from_samples(samples, edges);
        v.grid_tv = verify::tv_distance(hist.density.mass, reference.mass);
        v.grid_cells = opt.cells;
        v.grid_out_of_bounds = hist.out_of_bounds;
    }
    write_report(opt, to_json(v));
    out << "verify: " << (v.passed ? "pass" : "reject") << " (min p = " << suite.min_p_value()
        << ", " << v.reports.size() << " tests";
    if (v.grid_tv) {
        out << ", grid TV = " << *v.grid_tv;
    }
    out << ")\n";
    if (!suite.supported) {
        err << "error: " << suite.reason << '\n';
        return 1;
    }
    return v.passed ? 0 : 2;
}

inline int bench_command(const Options& opt, std::ostream& out, std::ostream& err)
{
    std::vector<int> dims;
    for (double v : parse_list(opt.dims, "--dims")) {
        if (v < 1 || v != std::floor(v)) {
            throw UsageError("--dims must be positive integers");
        }
        dims.push_back(static_cast<int>(v));
    }
    if (opt.half_width < 1.0) {
        throw UsageError("--half-width must be >= 1");
    }
    BenchReport report;
    report.seed = opt.seed;
    report.half_width = opt.half_width;
    // For Unif([-a, a]^d), E|X|^2 = d a^2 / 3.
    report.C = opt.has_C ? opt.C : std::max(1.0, opt.half_width / std::sqrt(3.0));
    report.eps = opt.has_eps ? opt.eps : 0.5;
    report.eta = opt.eta;
    report.tuning = opt.tuning;
    CoolingConfig config;
    config.C = report.C;
    config.eps = report.eps;
    config.eta = report.eta;
    config.tuning = report.tuning;
    validate(config);

    const unsigned seeds = opt.has_replicas ? opt.replicas : 5;
    report.rows.resize(dims.size() * seeds);
    parallel_for(report.rows.size(), opt.jobs, [&](std::size_t k) {
        const int d = dims[k / seeds];
        const std::uint64_t r = k % seeds;
        RandomStream rng(opt.seed, r);
        const CoolingReport rep = run_cooling(make_cube(d, opt.half_width), config, rng);
        report.rows[k] = {d, r, rep.total_queries, rep.wall_seconds, rep.failed};
    });

    std::vector<verify::ScalingPoint> points;
    std::set<int> distinct;
    std::size_t failures = 0;
    for (const auto& row : report.rows) {
        if (row.failed) {
            ++failures;
            continue;
        }
        points.push_back({row.d, static_cast<double>(row.total_queries), row.wall_seconds});
        distinct.insert(row.d);
    }
    if (distinct.size() >= 4) {
        report.fit = verify::query_scaling_fit(points);
    }

    std::ofstream file;
    std::ostream* dest = &out;
    if (!opt.out_path.empty()) {
        file = open_output(opt.out_path);
        dest = &file;
    }
    *dest << "d,replica,total_queries,wall_seconds,failed\n";
    for (const auto& row : report.rows) {
        *dest << row.d << ',' << row.replica << ',' << row.total_queries << ','
              << json(row.wall_seconds).dump() << ',' << (row.failed ? 1 : 0) << '\n';
    }
    write_report(opt, to_json(report));
    if (report.fit) {
        err << "slope " << report.fit->slope << " intercept " << report.fit->intercept << " r2 "
            << report.fit->r2 << '\n';
    } else {
        err << "scaling fit skipped (needs 4 distinct dimensions with successful runs)\n";
    }
    if (failures > 0) {
        err << failures << " cooling runs failed\n";
        return 2;
    }
    return 0;
}

}  // namespace detail

/// Runs the tool on argv and returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr)
{
    Options opt;
    CLI::App app{"Constrained proximal sampling on convex bodies given by a membership oracle",
                 "proxsample"};
    // -h is taken by the step size.
    app.set_help_flag("--help", "print this help and exit");
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.add_option("command", opt.command,
                   "sample-uniform | sample-gaussian | cool | verify | bench")
        ->check(CLI::IsMember({"sample-uniform", "sample-gaussian", "cool", "verify", "bench"}));
    std::string config_path;
    app.add_option("--config", config_path, "JSON file of option values (flags win)");
    app.add_option("--body", opt.body_path, "body definition file (JSON)");
    app.add_option("--samples", opt.samples_path, "sample file to verify");
    app.add_option("--seed", opt.seed, "master seed");
    auto* o_replicas = app.add_option("--replicas", opt.replicas, "independent replicas (bench: seeds per d)")
                           ->check(CLI::PositiveNumber);
    app.add_option("--jobs", opt.jobs, "worker threads")->check(CLI::PositiveNumber);
    auto* o_eps = app.add_option("--eps", opt.eps, "target accuracy");
    app.add_option("--eta", opt.eta, "failure budget");
    auto* o_sigma2 = app.add_option("--sigma2", opt.sigma2, "Gaussian variance");
    auto* o_C = app.add_option("--C", opt.C, "well-roundedness constant");
    auto* o_M = app.add_option("--M", opt.M, "warmness of the initial law");
    auto* o_n = app.add_option("--n", opt.n, "iteration count override");
    auto* o_h = app.add_option("--h", opt.h, "step size override");
    auto* o_N = app.add_option("--N", opt.N, "rejection threshold override");
    app.add_option("--init", opt.init, "initial point x1,x2,... (default: uniform on B_1)");
    app.add_option("--format", opt.format, "sample format")->check(CLI::IsMember({"jsonl", "csv"}));
    app.add_option("--retry", opt.retry, "abort | retry-phase:K");
    app.add_option("--trials", opt.trials, "per-iteration trial lists: full | summary")
        ->check(CLI::IsMember({"full", "summary"}));
    app.add_option("--out", opt.out_path, "sample (bench: table) output path");
    app.add_option("--report", opt.report_path, "JSON report path");
    app.add_option("--dims", opt.dims, "bench dimensions");
    app.add_option("--half-width", opt.half_width, "bench cube half width");
    app.add_option("--cells", opt.cells, "verify grid cells per axis (d <= 2)")->check(CLI::PositiveNumber);

    try {
        std::vector<std::string> args;
        for (int i = 1; i < argc; ++i) {
            args.emplace_back(argv[i]);
        }
        for (std::size_t i = 0; i + 1 < args.size(); ++i) {
            if (args[i] == "--config") {
                config_path = args[i + 1];
            } else if (args[i].rfind("--config=", 0) == 0) {
                config_path = args[i].substr(9);
            }
        }
        if (args.size() == 1 && args[0].rfind("--config=", 0) == 0) {
            config_path = args[0].substr(9);
        }
        std::vector<std::string> tokens;
        if (!config_path.empty()) {
            tokens = detail::config_tokens(config_path, opt);
        }
        // A leading command on the command line replaces one from the config.
        if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
            if (!tokens.empty() && !tokens[0].empty() && tokens[0][0] != '-') {
                tokens.erase(tokens.begin());
            }
            tokens.insert(tokens.begin(), args[0]);
            args.erase(args.begin());
        }
        tokens.insert(tokens.end(), args.begin(), args.end());
        std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
        app.parse(reversed);

        opt.has_eps = o_eps->count() > 0;
        opt.has_sigma2 = o_sigma2->count() > 0;
        opt.has_C = o_C->count() > 0;
        opt.has_M = o_M->count() > 0;
        opt.has_h = o_h->count() > 0;
        opt.has_n = o_n->count() > 0;
        opt.has_N = o_N->count() > 0;
        opt.has_replicas = o_replicas->count() > 0;
        if (opt.command.empty()) {
            throw UsageError("missing command");
        }

        if (opt.command == "sample-uniform" || opt.command == "sample-gaussian") {
            return detail::sample_command(opt, out, err);
        }
        if (opt.command == "cool") {
            return detail::cool_command(opt, out, err);
        }
        if (opt.command == "verify") {
            return detail::verify_command(opt, out, err);
        }
        return detail::bench_command(opt, out, err);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace proxsampler::cli
