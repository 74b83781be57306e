// SPDX-License-Identifier: Apache-2.0
//
// JSON documents for bodies and reports, and sample streams.
//
// Body file:
//   {
//     "dim": 2,
//     "variant": "box",                 // ball | box | hpolytope | ellipsoid | intersection
//     "params": {"lo": [-2, -2], "hi": [2, 2]},
//     "inscribed_radius": 2,
//     "circumscribed_radius": 2.8284271247461903,
//     "allow_rescale": false            // optional; permits inscribed_radius < 1
//   }
// params per variant:
//   ball          {"radius": R}
//   box           {"lo": [...], "hi": [...]}
//   hpolytope     {"rows": [{"normal": [...], "offset": b}, ...]}   meaning normal·x <= b
//   ellipsoid     {"semi_axes": [...]}
//   intersection  {"members": [<body>, ...]}
// Doubles are written in shortest round-trip form, so parse(serialize(b)) == b
// bit for bit.

#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "proxsampler/annealing.hpp"
#include "proxsampler/error.hpp"
#include "proxsampler/geometry.hpp"
#include "proxsampler/sampler.hpp"

namespace proxsampler::io {

using json = nlohmann::json;

/// Malformed document or file.
class FormatError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline json vec_to_json(const Vector& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v[i]);
    }
    return a;
}

inline Vector vec_from_json(const json& a, const char* what)
{
    if (!a.is_array()) {
        throw FormatError(std::string(what) + " must be an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) {
            throw FormatError(std::string(what) + " must be an array of numbers");
        }
        v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
    }
    return v;
}

inline const json& field(const json& j, const char* key)
{
    if (!j.is_object() || !j.contains(key)) {
        throw FormatError(std::string("missing field \"") + key + "\"");
    }
    return j.at(key);
}

inline double number(const json& j, const char* key)
{
    const json& v = field(j, key);
    if (!v.is_number()) {
        throw FormatError(std::string("field \"") + key + "\" must be a number");
    }
    return v.get<double>();
}

inline std::uint64_t count(const json& j, const char* key)
{
    const json& v = field(j, key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw FormatError(std::string("field \"") + key + "\" must be a nonnegative integer");
    }
    return v.get<std::uint64_t>();
}

inline json optional_vec(const std::optional<Vector>& v)
{
    return v ? vec_to_json(*v) : json(nullptr);
}

inline std::optional<Vector> optional_vec(const json& j, const char* key)
{
    const json& v = field(j, key);
    if (v.is_null()) {
        return std::nullopt;
    }
    return vec_from_json(v, key);
}

}  // namespace detail

//---------------------------------------------------------------------------//
// Bodies
//---------------------------------------------------------------------------//

inline json body_to_json(const BodySpec& body)
{
    json j;
    j["dim"] = body.dim();
    std::visit(
        [&j](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, shape::Ball>) {
                j["variant"] = "ball";
                j["params"] = {{"radius", v.radius}};
            } else if constexpr (std::is_same_v<T, shape::Box>) {
                j["variant"] = "box";
                j["params"] = {{"lo", detail::vec_to_json(v.lo)}, {"hi", detail::vec_to_json(v.hi)}};
            } else if constexpr (std::is_same_v<T, shape::HPolytope>) {
                j["variant"] = "hpolytope";
                json rows = json::array();
                for (Eigen::Index r = 0; r < v.normals.rows(); ++r) {
                    rows.push_back({{"normal", detail::vec_to_json(v.normals.row(r).transpose())},
                                    {"offset", v.offsets[r]}});
                }
                j["params"] = {{"rows", rows}};
            } else if constexpr (std::is_same_v<T, shape::Ellipsoid>) {
                j["variant"] = "ellipsoid";
                j["params"] = {{"semi_axes", detail::vec_to_json(v.semi_axes)}};
            } else {
                j["variant"] = "intersection";
                json members = json::array();
                for (const auto& m : v.members) {
                    members.push_back(body_to_json(m));
                }
                j["params"] = {{"members", members}};
            }
        },
        body.shape());
    j["inscribed_radius"] = body.inscribed_radius();
    j["circumscribed_radius"] = body.circumscribed_radius();
    if (body.inscribed_radius() < 1.0) {
        j["allow_rescale"] = true;
    }
    return j;
}

/// Parses a body document. Members of an intersection and bodies flagged
/// allow_rescale may have inscribed radius below 1.
inline BodySpec body_from_json(const json& j, bool nested = false)
{
    const auto dim = static_cast<int>(detail::number(j, "dim"));
    const json& variant_field = detail::field(j, "variant");
    if (!variant_field.is_string()) {
        throw FormatError("field \"variant\" must be a string");
    }
    const std::string variant = variant_field.get<std::string>();
    const json& params = detail::field(j, "params");
    const double r_in = detail::number(j, "inscribed_radius");
    const double outer = detail::number(j, "circumscribed_radius");
    const bool rescale = j.contains("allow_rescale") && j.at("allow_rescale").get<bool>();
    const Normalization norm =
        (nested || rescale) ? Normalization::any_inradius : Normalization::unit_inradius;

    Shape shape;
    if (variant == "ball") {
        shape = shape::Ball{dim, detail::number(params, "radius")};
    } else if (variant == "box") {
        shape = shape::Box{detail::vec_from_json(detail::field(params, "lo"), "lo"),
                           detail::vec_from_json(detail::field(params, "hi"), "hi")};
    } else if (variant == "hpolytope") {
        const json& rows = detail::field(params, "rows");
        if (!rows.is_array() || rows.empty()) {
            throw FormatError("hpolytope needs a nonempty \"rows\" array");
        }
        shape::HPolytope p{Eigen::MatrixXd(static_cast<Eigen::Index>(rows.size()), dim),
                           Vector(static_cast<Eigen::Index>(rows.size()))};
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const Vector a = detail::vec_from_json(detail::field(rows[r], "normal"), "normal");
            if (a.size() != dim) {
                throw FormatError("hpolytope normal has the wrong length");
            }
            p.normals.row(static_cast<Eigen::Index>(r)) = a.transpose();
            p.offsets[static_cast<Eigen::Index>(r)] = detail::number(rows[r], "offset");
        }
        shape = std::move(p);
    } else if (variant == "ellipsoid") {
        shape = shape::Ellipsoid{detail::vec_from_json(detail::field(params, "semi_axes"), "semi_axes")};
    } else if (variant == "intersection") {
        const json& members = detail::field(params, "members");
        if (!members.is_array() || members.empty()) {
            throw FormatError("intersection needs a nonempty \"members\" array");
        }
        shape::Intersection in;
        for (const auto& m : members) {
            in.members.push_back(body_from_json(m, true));
        }
        shape = std::move(in);
    } else {
        throw FormatError("unknown body variant \"" + variant + "\"");
    }
    BodySpec body = BodySpec::create(std::move(shape), r_in, outer, norm);
    if (body.dim() != dim) {
        throw FormatError("body \"dim\" does not match its parameters");
    }
    return body;
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot read " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json parse_json(const std::string& text, const std::string& origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(origin + ": " + e.what());
    }
}

inline BodySpec load_body(const std::string& path)
{
    try {
        return body_from_json(parse_json(read_file(path), path));
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

//---------------------------------------------------------------------------//
// Reports
//---------------------------------------------------------------------------//

inline json to_json(const TuningConstants& t)
{
    return {{"c_uniform", t.c_uniform},
            {"c_gaussian", t.c_gaussian},
            {"iteration_log_power", t.iteration_log_power},
            {"threshold_log_power", t.threshold_log_power},
            {"phase1_gamma", t.phase1_gamma},
            {"threshold_cap", t.threshold_cap},
            {"loglog_gaussian_step", t.loglog_gaussian_step}};
}

/// Fields absent from `j` keep their defaults.
inline TuningConstants tuning_from_json(const json& j)
{
    TuningConstants t;
    if (!j.is_object()) {
        throw FormatError("tuning must be an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        const std::string& k = it.key();
        if (k == "c_uniform") t.c_uniform = it->get<double>();
        else if (k == "c_gaussian") t.c_gaussian = it->get<double>();
        else if (k == "iteration_log_power") t.iteration_log_power = it->get<double>();
        else if (k == "threshold_log_power") t.threshold_log_power = it->get<double>();
        else if (k == "phase1_gamma") t.phase1_gamma = it->get<double>();
        else if (k == "threshold_cap") t.threshold_cap = it->get<std::uint64_t>();
        else if (k == "loglog_gaussian_step") t.loglog_gaussian_step = it->get<bool>();
        else throw FormatError("unknown tuning field \"" + k + "\"");
    }
    return t;
}

inline json to_json(const ProxParams& p)
{
    return {{"h", p.h},
            {"N", p.N},
            {"n", p.n},
            {"M", p.M},
            {"eta", p.eta},
            {"eps", p.eps},
            {"threshold_capped", p.threshold_capped},
            {"threshold_uncapped", p.threshold_uncapped}};
}

inline ProxParams params_from_json(const json& j)
{
    ProxParams p;
    p.h = detail::number(j, "h");
    p.N = detail::count(j, "N");
    p.n = detail::count(j, "n");
    p.M = detail::number(j, "M");
    p.eta = detail::number(j, "eta");
    p.eps = detail::number(j, "eps");
    p.threshold_capped = detail::field(j, "threshold_capped").get<bool>();
    p.threshold_uncapped = detail::number(j, "threshold_uncapped");
    return p;
}

inline json to_json(const QueryLedger& l)
{
    return {{"total_queries", l.total_queries},
            {"per_iteration_trials", l.per_iteration_trials},
            {"failures", l.failures},
            {"detailed", l.detailed},
            {"iterations", l.iterations},
            {"iteration_trials", l.iteration_trials},
            {"max_trials", l.max_trials}};
}

inline QueryLedger ledger_from_json(const json& j)
{
    QueryLedger l;
    l.total_queries = detail::count(j, "total_queries");
    l.per_iteration_trials = detail::field(j, "per_iteration_trials").get<std::vector<std::uint64_t>>();
    l.failures = detail::count(j, "failures");
    l.detailed = detail::field(j, "detailed").get<bool>();
    l.iterations = detail::count(j, "iterations");
    l.iteration_trials = detail::count(j, "iteration_trials");
    l.max_trials = detail::count(j, "max_trials");
    return l;
}

inline json to_json(const RunReport& r)
{
    return {{"final_point", detail::optional_vec(r.final_point)},
            {"failed", r.failed},
            {"failure_iteration",
             r.failure_iteration ? json(*r.failure_iteration) : json(nullptr)},
            {"ledger", to_json(r.ledger)},
            {"params", to_json(r.params_used)}};
}

inline RunReport run_report_from_json(const json& j)
{
    RunReport r;
    r.final_point = detail::optional_vec(j, "final_point");
    r.failed = detail::field(j, "failed").get<bool>();
    if (!detail::field(j, "failure_iteration").is_null()) {
        r.failure_iteration = detail::count(j, "failure_iteration");
    }
    r.ledger = ledger_from_json(detail::field(j, "ledger"));
    r.params_used = params_from_json(detail::field(j, "params"));
    return r;
}

inline Phase phase_from_string(const std::string& s)
{
    if (s == "I") return Phase::I;
    if (s == "II") return Phase::II;
    if (s == "III") return Phase::III;
    if (s == "IV") return Phase::IV;
    throw FormatError("unknown phase \"" + s + "\"");
}

inline json to_json(const RetryPolicy& r)
{
    return {{"mode", r.mode == RetryPolicy::Mode::abort ? "abort" : "retry-phase"},
            {"max_retries", r.max_retries}};
}

inline RetryPolicy retry_from_json(const json& j)
{
    const std::string mode = detail::field(j, "mode").get<std::string>();
    const auto k = static_cast<unsigned>(detail::count(j, "max_retries"));
    if (mode == "abort") {
        RetryPolicy r = RetryPolicy::abort();
        r.max_retries = k;
        return r;
    }
    if (mode == "retry-phase") {
        return RetryPolicy::retry_phase(k);
    }
    throw FormatError("unknown retry mode \"" + mode + "\"");
}

inline json to_json(const CoolingSchedule& s)
{
    json phases = json::array();
    for (Phase p : s.phases) {
        phases.push_back(to_string(p));
    }
    return {{"L", s.L},
            {"sigma2_sequence", s.sigma2_sequence},
            {"phases", phases},
            {"hat_eta", s.hat_eta},
            {"truncated_body", s.truncated_body ? body_to_json(*s.truncated_body) : json(nullptr)}};
}

inline CoolingSchedule schedule_from_json(const json& j)
{
    CoolingSchedule s;
    s.L = detail::number(j, "L");
    s.sigma2_sequence = detail::field(j, "sigma2_sequence").get<std::vector<double>>();
    for (const auto& p : detail::field(j, "phases")) {
        s.phases.push_back(phase_from_string(p.get<std::string>()));
    }
    s.hat_eta = detail::number(j, "hat_eta");
    if (!detail::field(j, "truncated_body").is_null()) {
        s.truncated_body = body_from_json(j.at("truncated_body"), true);
    }
    return s;
}

inline json to_json(const CoolingReport& r)
{
    json phases = json::array();
    for (const auto& rec : r.per_phase) {
        phases.push_back({{"phase", to_string(rec.phase)},
                          {"sigma2", rec.sigma2 ? json(*rec.sigma2) : json(nullptr)},
                          {"attempt", rec.attempt},
                          {"report", to_json(rec.report)},
                          {"wall_seconds", rec.wall_seconds}});
    }
    return {{"schedule", to_json(r.schedule)},
            {"per_phase", phases},
            {"total_queries", r.total_queries},
            {"final_point", detail::optional_vec(r.final_point)},
            {"failed", r.failed},
            {"failed_phase", r.failed_phase ? json(*r.failed_phase) : json(nullptr)},
            {"retry", to_json(r.retry)},
            {"wall_seconds", r.wall_seconds}};
}

inline CoolingReport cooling_report_from_json(const json& j)
{
    CoolingReport r;
    r.schedule = schedule_from_json(detail::field(j, "schedule"));
    for (const auto& p : detail::field(j, "per_phase")) {
        PhaseRecord rec;
        rec.phase = phase_from_string(detail::field(p, "phase").get<std::string>());
        if (!detail::field(p, "sigma2").is_null()) {
            rec.sigma2 = detail::number(p, "sigma2");
        }
        rec.attempt = static_cast<unsigned>(detail::count(p, "attempt"));
        rec.report = run_report_from_json(detail::field(p, "report"));
        rec.wall_seconds = detail::number(p, "wall_seconds");
        r.per_phase.push_back(std::move(rec));
    }
    r.total_queries = detail::count(j, "total_queries");
    r.final_point = detail::optional_vec(j, "final_point");
    r.failed = detail::field(j, "failed").get<bool>();
    if (!detail::field(j, "failed_phase").is_null()) {
        r.failed_phase = static_cast<std::size_t>(detail::count(j, "failed_phase"));
    }
    r.retry = retry_from_json(detail::field(j, "retry"));
    r.wall_seconds = detail::number(j, "wall_seconds");
    return r;
}

//---------------------------------------------------------------------------//
// Sample streams
//---------------------------------------------------------------------------//

enum class SampleFormat
{
    jsonl,
    csv,
};

inline SampleFormat parse_format(const std::string& s)
{
    if (s == "jsonl") return SampleFormat::jsonl;
    if (s == "csv") return SampleFormat::csv;
    throw FormatError("unknown sample format \"" + s + "\" (expected jsonl or csv)");
}

/// One point per line: {"x": [...]} for JSON Lines, plain decimals for CSV.
/// Both forms print shortest round-trip decimals.
inline void write_sample(std::ostream& out, const Vector& x, SampleFormat format)
{
    if (format == SampleFormat::jsonl) {
        out << json{{"x", detail::vec_to_json(x)}}.dump() << '\n';
        return;
    }
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (i > 0) {
            out << ',';
        }
        out << json(x[i]).dump();
    }
    out << '\n';
}

inline std::vector<Vector> read_samples(std::istream& in, SampleFormat format)
{
    std::vector<Vector> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            if (format == SampleFormat::jsonl) {
                out.push_back(detail::vec_from_json(detail::field(json::parse(line), "x"), "x"));
            } else {
                std::vector<double> values;
                std::stringstream ss(line);
                std::string cell;
                while (std::getline(ss, cell, ',')) {
                    double v = 0.0;
                    const char* end = cell.data() + cell.size();
                    const auto [ptr, ec] = std::from_chars(cell.data(), end, v);
                    if (ec != std::errc() || ptr != end) {
                        throw FormatError("bad number \"" + cell + "\"");
                    }
                    values.push_back(v);
                }
                out.push_back(Eigen::Map<const Vector>(values.data(),
                                                       static_cast<Eigen::Index>(values.size())));
            }
        } catch (const std::exception& e) {
            throw FormatError("sample line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<Vector> load_samples(const std::string& path, SampleFormat format)
{
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot read " + path);
    }
    return read_samples(in, format);
}

}  // namespace proxsampler::io
