// SPDX-License-Identifier: Apache-2.0
//
// Convex bodies behind a membership oracle.
//
// A BodySpec couples an analytic shape with two declared radii,
//   B_{r_in}(0) ⊆ K ⊆ B_D(0),
// which are checked against the shape when the body is created. Samplers
// only ever call contains(), and every call is charged to a QueryLedger.
// Containment is closed (boundary points are inside) and uses raw IEEE
// comparisons without tolerance.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "proxsampler/error.hpp"
#include "proxsampler/random.hpp"

namespace proxsampler {

using Vector = Eigen::VectorXd;

inline bool all_finite(const Vector& x)
{
    return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

/// Equality of optional points, false (not an assertion) on size mismatch.
inline bool same_point(const std::optional<Vector>& a, const std::optional<Vector>& b)
{
    if (a.has_value() != b.has_value()) {
        return false;
    }
    return !a || (a->size() == b->size() && *a == *b);
}

struct QueryLedger
{
    std::uint64_t total_queries = 0;
    /// One entry per sampler iteration; left empty when `detailed` is false.
    std::vector<std::uint64_t> per_iteration_trials;
    std::uint64_t failures = 0;

    // Running summary, kept in both modes.
    bool detailed = true;
    std::uint64_t iterations = 0;
    std::uint64_t iteration_trials = 0;
    std::uint64_t max_trials = 0;

    void record_iteration(std::uint64_t trials)
    {
        if (detailed) {
            per_iteration_trials.push_back(trials);
        }
        ++iterations;
        iteration_trials += trials;
        max_trials = std::max(max_trials, trials);
    }

    std::uint64_t iteration_queries() const { return iteration_trials; }

    /// Queries charged outside of sampler iterations.
    std::uint64_t setup_queries() const { return total_queries - iteration_trials; }

    bool operator==(const QueryLedger&) const = default;
};

class BodySpec;

namespace shape {

struct Ball
{
    int dim = 0;
    double radius = 0.0;
};

struct Box
{
    Vector lo;
    Vector hi;
};

/// Rows a_i · x <= b_i. Row i of `normals` is a_i.
struct HPolytope
{
    Eigen::MatrixXd normals;
    Vector offsets;
};

/// Axis-aligned ellipsoid sum_i (x_i / a_i)^2 <= 1.
struct Ellipsoid
{
    Vector semi_axes;
};

struct Intersection
{
    std::vector<BodySpec> members;
};

}  // namespace shape

using Shape = std::variant<shape::Ball, shape::Box, shape::HPolytope, shape::Ellipsoid,
                           shape::Intersection>;

enum class Normalization
{
    unit_inradius,  // reject r_in < 1
    any_inradius,   // caller will rescale before sampling
};

class BodySpec
{
  public:
    static BodySpec create(Shape shape, double inscribed_radius, double circumscribed_radius,
                           Normalization norm = Normalization::unit_inradius);

    int dim() const { return dim_; }
    double inscribed_radius() const { return inscribed_radius_; }
    double circumscribed_radius() const { return circumscribed_radius_; }
    const Shape& shape() const { return shape_; }

    /// Geometric test without query accounting. Samplers go through contains().
    bool holds(const Vector& x) const;

    bool operator==(const BodySpec& other) const;

  private:
    BodySpec() = default;

    Shape shape_;
    int dim_ = 0;
    double inscribed_radius_ = 0.0;
    double circumscribed_radius_ = 0.0;
};

namespace detail {

inline int shape_dim(const Shape& s)
{
    return std::visit(
        [](const auto& v) -> int {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, shape::Ball>) {
                return v.dim;
            } else if constexpr (std::is_same_v<T, shape::Box>) {
                return static_cast<int>(v.lo.size());
            } else if constexpr (std::is_same_v<T, shape::HPolytope>) {
                return static_cast<int>(v.normals.cols());
            } else if constexpr (std::is_same_v<T, shape::Ellipsoid>) {
                return static_cast<int>(v.semi_axes.size());
            } else {
                return v.members.empty() ? 0 : v.members.front().dim();
            }
        },
        s);
}

inline bool shape_holds(const Shape& s, const Vector& x)
{
    return std::visit(
        [&x](const auto& v) -> bool {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, shape::Ball>) {
                return x.squaredNorm() <= v.radius * v.radius;
            } else if constexpr (std::is_same_v<T, shape::Box>) {
                for (Eigen::Index i = 0; i < x.size(); ++i) {
                    if (x[i] < v.lo[i] || x[i] > v.hi[i]) {
                        return false;
                    }
                }
                return true;
            } else if constexpr (std::is_same_v<T, shape::HPolytope>) {
                for (Eigen::Index r = 0; r < v.normals.rows(); ++r) {
                    if (v.normals.row(r).dot(x) > v.offsets[r]) {
                        return false;
                    }
                }
                return true;
            } else if constexpr (std::is_same_v<T, shape::Ellipsoid>) {
                return x.cwiseQuotient(v.semi_axes).squaredNorm() <= 1.0;
            } else {
                for (const auto& member : v.members) {
                    if (!member.holds(x)) {
                        return false;
                    }
                }
                return true;
            }
        },
        s);
}

/// True when B_r(0) is contained in the shape.
inline bool shape_inscribes(const Shape& s, double r)
{
    return std::visit(
        [r](const auto& v) -> bool {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, shape::Ball>) {
                return r <= v.radius;
            } else if constexpr (std::is_same_v<T, shape::Box>) {
                return (v.lo.array() <= -r).all() && (v.hi.array() >= r).all();
            } else if constexpr (std::is_same_v<T, shape::HPolytope>) {
                for (Eigen::Index i = 0; i < v.normals.rows(); ++i) {
                    if (v.offsets[i] < r * v.normals.row(i).norm()) {
                        return false;
                    }
                }
                return true;
            } else if constexpr (std::is_same_v<T, shape::Ellipsoid>) {
                return r <= v.semi_axes.minCoeff();
            } else {
                for (const auto& member : v.members) {
                    if (!shape_inscribes(member.shape(), r)) {
                        return false;
                    }
                }
                return true;
            }
        },
        s);
}

constexpr std::uint64_t kMaxVertexCandidates = 200000;

inline std::uint64_t binomial(int n, int k)
{
    if (k < 0 || k > n) {
        return 0;
    }
    long double acc = 1.0L;
    for (int i = 1; i <= k; ++i) {
        acc = acc * (n - k + i) / i;
        if (acc > 1e18L) {
            return std::numeric_limits<std::uint64_t>::max();
        }
    }
    return static_cast<std::uint64_t>(std::llround(acc));
}

/// Largest vertex norm of {x : A x <= b} by vertex enumeration, or +inf when
/// there are too many candidate vertices to enumerate.
inline double max_vertex_norm(const shape::HPolytope& p)
{
    const int m = static_cast<int>(p.normals.rows());
    const int d = static_cast<int>(p.normals.cols());
    if (m < d || binomial(m, d) > kMaxVertexCandidates) {
        return std::numeric_limits<double>::infinity();
    }
    std::vector<int> pick(static_cast<std::size_t>(d));
    std::iota(pick.begin(), pick.end(), 0);
    double best = 0.0;
    Eigen::MatrixXd sub(d, d);
    Vector rhs(d);
    const double scale = std::max(1.0, p.offsets.cwiseAbs().maxCoeff());
    while (true) {
        for (int i = 0; i < d; ++i) {
            sub.row(i) = p.normals.row(pick[static_cast<std::size_t>(i)]);
            rhs[i] = p.offsets[pick[static_cast<std::size_t>(i)]];
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
        if (lu.isInvertible()) {
            const Vector v = lu.solve(rhs);
            const Vector slack = p.normals * v - p.offsets;
            if (slack.maxCoeff() <= 1e-9 * scale) {
                best = std::max(best, v.norm());
            }
        }
        int k = d - 1;
        while (k >= 0 && pick[static_cast<std::size_t>(k)] == m - d + k) {
            --k;
        }
        if (k < 0) {
            break;
        }
        ++pick[static_cast<std::size_t>(k)];
        for (int j = k + 1; j < d; ++j) {
            pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
        }
    }
    return best;
}

/// As max_vertex_norm, but throws InvalidBody when the polytope is unbounded.
/// The recession cone {u : A u <= 0} is trivial iff its intersection with the
/// unit cube has no vertex other than the origin.
inline double polytope_max_vertex_norm(const shape::HPolytope& p)
{
    const double outer = max_vertex_norm(p);
    if (!std::isfinite(outer)) {
        return outer;
    }
    const Eigen::Index m = p.normals.rows();
    const Eigen::Index d = p.normals.cols();
    shape::HPolytope cone;
    cone.normals.resize(m + 2 * d, d);
    cone.normals << p.normals, Eigen::MatrixXd::Identity(d, d), -Eigen::MatrixXd::Identity(d, d);
    cone.offsets = Vector::Zero(m + 2 * d);
    cone.offsets.tail(2 * d).setOnes();
    const double reach = max_vertex_norm(cone);
    if (std::isfinite(reach) && reach > 1e-9) {
        throw InvalidBody("polytope is unbounded");
    }
    return outer;
}

/// An upper bound on max ||x|| over the shape (+inf if not computable).
inline double shape_outer_radius(const Shape& s)
{
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, shape::Ball>) {
                return v.radius;
            } else if constexpr (std::is_same_v<T, shape::Box>) {
                return v.lo.cwiseAbs().cwiseMax(v.hi.cwiseAbs()).norm();
            } else if constexpr (std::is_same_v<T, shape::HPolytope>) {
                return polytope_max_vertex_norm(v);
            } else if constexpr (std::is_same_v<T, shape::Ellipsoid>) {
                return v.semi_axes.maxCoeff();
            } else {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& member : v.members) {
                    best = std::min(best, member.circumscribed_radius());
                }
                return best;
            }
        },
        s);
}

inline void validate_shape(const Shape& s)
{
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, shape::Ball>) {
                if (v.dim < 1 || !(v.radius > 0.0) || !std::isfinite(v.radius)) {
                    throw InvalidBody("ball needs dim >= 1 and a finite positive radius");
                }
            } else if constexpr (std::is_same_v<T, shape::Box>) {
                if (v.lo.size() < 1 || v.lo.size() != v.hi.size() || !all_finite(v.lo)
                    || !all_finite(v.hi)) {
                    throw InvalidBody("box bounds must be finite vectors of equal length");
                }
            } else if constexpr (std::is_same_v<T, shape::HPolytope>) {
                if (v.normals.cols() < 1 || v.normals.rows() != v.offsets.size()
                    || !v.normals.allFinite() || !all_finite(v.offsets)) {
                    throw InvalidBody("polytope needs one finite offset per finite normal row");
                }
            } else if constexpr (std::is_same_v<T, shape::Ellipsoid>) {
                if (v.semi_axes.size() < 1 || !all_finite(v.semi_axes)
                    || (v.semi_axes.array() <= 0.0).any()) {
                    throw InvalidBody("ellipsoid semi-axes must be finite and positive");
                }
            } else {
                if (v.members.empty()) {
                    throw InvalidBody("intersection needs at least one member");
                }
                const int d = v.members.front().dim();
                for (const auto& member : v.members) {
                    if (member.dim() != d) {
                        throw InvalidBody("intersection members disagree on dimension");
                    }
                }
            }
        },
        s);
}

}  // namespace detail

inline BodySpec BodySpec::create(Shape shape, double inscribed_radius,
                                 double circumscribed_radius, Normalization norm)
{
    detail::validate_shape(shape);
    if (!std::isfinite(inscribed_radius) || !(inscribed_radius > 0.0)) {
        throw InvalidBody("inscribed radius must be finite and positive");
    }
    if (!std::isfinite(circumscribed_radius) || circumscribed_radius < inscribed_radius) {
        throw InvalidBody("circumscribed radius must be finite and >= inscribed radius");
    }
    if (norm == Normalization::unit_inradius && inscribed_radius < 1.0) {
        throw InvalidBody("inscribed radius " + std::to_string(inscribed_radius)
                          + " < 1; rescale the body first");
    }
    if (!detail::shape_inscribes(shape, inscribed_radius)) {
        throw InvalidBody("declared inscribed ball is not contained in the body");
    }
    const double outer = detail::shape_outer_radius(shape);
    if (std::isfinite(outer) && circumscribed_radius < outer * (1.0 - 1e-12)) {
        throw InvalidBody("body is not contained in the declared circumscribed ball (needs D >= "
                          + std::to_string(outer) + ")");
    }
    BodySpec body;
    body.dim_ = detail::shape_dim(shape);
    body.shape_ = std::move(shape);
    body.inscribed_radius_ = inscribed_radius;
    body.circumscribed_radius_ = circumscribed_radius;
    return body;
}

inline bool BodySpec::holds(const Vector& x) const { return detail::shape_holds(shape_, x); }

namespace detail {

inline bool shape_equal(const Shape& a, const Shape& b)
{
    if (a.index() != b.index()) {
        return false;
    }
    return std::visit(
        [&b](const auto& va) -> bool {
            using T = std::decay_t<decltype(va)>;
            const auto& vb = std::get<T>(b);
            if constexpr (std::is_same_v<T, shape::Ball>) {
                return va.dim == vb.dim && va.radius == vb.radius;
            } else if constexpr (std::is_same_v<T, shape::Box>) {
                return va.lo.size() == vb.lo.size() && va.lo == vb.lo && va.hi == vb.hi;
            } else if constexpr (std::is_same_v<T, shape::HPolytope>) {
                return va.normals.rows() == vb.normals.rows()
                       && va.normals.cols() == vb.normals.cols() && va.normals == vb.normals
                       && va.offsets == vb.offsets;
            } else if constexpr (std::is_same_v<T, shape::Ellipsoid>) {
                return va.semi_axes.size() == vb.semi_axes.size() && va.semi_axes == vb.semi_axes;
            } else {
                return va.members == vb.members;
            }
        },
        a);
}

}  // namespace detail

inline bool BodySpec::operator==(const BodySpec& other) const
{
    return dim_ == other.dim_ && inscribed_radius_ == other.inscribed_radius_
           && circumscribed_radius_ == other.circumscribed_radius_
           && detail::shape_equal(shape_, other.shape_);
}

//---------------------------------------------------------------------------//
// Constructors with derived radii
//---------------------------------------------------------------------------//

inline BodySpec make_ball(int dim, double radius, Normalization norm = Normalization::unit_inradius)
{
    return BodySpec::create(shape::Ball{dim, radius}, radius, radius, norm);
}

inline BodySpec make_box(Vector lo, Vector hi, Normalization norm = Normalization::unit_inradius)
{
    shape::Box box{std::move(lo), std::move(hi)};
    detail::validate_shape(box);
    const double r_in = std::min((-box.lo).minCoeff(), box.hi.minCoeff());
    const double outer = detail::shape_outer_radius(box);
    return BodySpec::create(std::move(box), r_in, outer, norm);
}

/// The cube [-half_width, half_width]^dim.
inline BodySpec make_cube(int dim, double half_width,
                          Normalization norm = Normalization::unit_inradius)
{
    require(dim >= 1, "cube dimension must be >= 1");
    return make_box(Vector::Constant(dim, -half_width), Vector::Constant(dim, half_width), norm);
}

inline BodySpec make_ellipsoid(Vector semi_axes, Normalization norm = Normalization::unit_inradius)
{
    shape::Ellipsoid e{std::move(semi_axes)};
    detail::validate_shape(e);
    const double r_in = e.semi_axes.minCoeff();
    const double outer = e.semi_axes.maxCoeff();
    return BodySpec::create(std::move(e), r_in, outer, norm);
}

inline BodySpec make_polytope(Eigen::MatrixXd normals, Vector offsets,
                              Normalization norm = Normalization::unit_inradius)
{
    shape::HPolytope p{std::move(normals), std::move(offsets)};
    detail::validate_shape(p);
    double r_in = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < p.normals.rows(); ++i) {
        r_in = std::min(r_in, p.offsets[i] / p.normals.row(i).norm());
    }
    const double outer = detail::shape_outer_radius(p);
    if (!std::isfinite(outer)) {
        throw InvalidBody("polytope too large for vertex enumeration; declare radii explicitly");
    }
    return BodySpec::create(std::move(p), r_in, outer, norm);
}

inline BodySpec make_intersection(std::vector<BodySpec> members,
                                  Normalization norm = Normalization::unit_inradius)
{
    require(!members.empty(), "intersection needs at least one member");
    double r_in = std::numeric_limits<double>::infinity();
    double outer = std::numeric_limits<double>::infinity();
    for (const auto& m : members) {
        r_in = std::min(r_in, m.inscribed_radius());
        outer = std::min(outer, m.circumscribed_radius());
    }
    return BodySpec::create(shape::Intersection{std::move(members)}, r_in, std::max(outer, r_in),
                            norm);
}

//---------------------------------------------------------------------------//
// Oracle operations
//---------------------------------------------------------------------------//

/// Membership query. Charges exactly one query to the ledger.
inline bool contains(const BodySpec& body, const Vector& x, QueryLedger& ledger)
{
    if (x.size() != body.dim()) {
        throw ContractViolation("point dimension " + std::to_string(x.size())
                                + " does not match body dimension "
                                + std::to_string(body.dim()));
    }
    ++ledger.total_queries;
    return body.holds(x);
}

/// K ∩ B_radius(0). The inscribed radius is kept; D becomes min(D, radius).
inline BodySpec truncate_to_ball(const BodySpec& body, double radius)
{
    if (!(radius >= body.inscribed_radius())) {
        throw InvalidTruncation("truncation radius " + std::to_string(radius)
                                + " is below the inscribed radius "
                                + std::to_string(body.inscribed_radius()));
    }
    std::vector<BodySpec> members{body,
                                  BodySpec::create(shape::Ball{body.dim(), radius}, radius, radius,
                                                   Normalization::any_inradius)};
    return BodySpec::create(shape::Intersection{std::move(members)}, body.inscribed_radius(),
                            std::min(body.circumscribed_radius(), radius),
                            Normalization::any_inradius);
}

namespace detail {

inline Shape shrink_shape(const Shape& s, double divisor);

inline BodySpec shrink_body(const BodySpec& b, double divisor)
{
    return BodySpec::create(shrink_shape(b.shape(), divisor), b.inscribed_radius() / divisor,
                            b.circumscribed_radius() / divisor, Normalization::any_inradius);
}

inline Shape shrink_shape(const Shape& s, double divisor)
{
    return std::visit(
        [divisor](const auto& v) -> Shape {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, shape::Ball>) {
                return shape::Ball{v.dim, v.radius / divisor};
            } else if constexpr (std::is_same_v<T, shape::Box>) {
                return shape::Box{v.lo / divisor, v.hi / divisor};
            } else if constexpr (std::is_same_v<T, shape::HPolytope>) {
                return shape::HPolytope{v.normals, v.offsets / divisor};
            } else if constexpr (std::is_same_v<T, shape::Ellipsoid>) {
                return shape::Ellipsoid{v.semi_axes / divisor};
            } else {
                shape::Intersection out;
                for (const auto& m : v.members) {
                    out.members.push_back(shrink_body(m, divisor));
                }
                return out;
            }
        },
        s);
}

}  // namespace detail

struct RescaledBody
{
    BodySpec body;
    /// Coordinates of the rescaled body are original coordinates / scale.
    double scale;
};

/// Maps K to K / r_in so that B_1(0) ⊆ K / r_in.
inline RescaledBody rescale_to_unit_inradius(const BodySpec& body)
{
    const double scale = body.inscribed_radius();
    const BodySpec scaled = detail::shrink_body(body, scale);
    return {BodySpec::create(scaled.shape(), scaled.inscribed_radius(),
                             scaled.circumscribed_radius(), Normalization::unit_inradius),
            scale};
}

/// Uniform draw from the unit ball: Gaussian direction, radius U^{1/d}.
template <class Rng>
Vector sample_unit_ball(int d, Rng& rng)
{
    require(d >= 1, "sample_unit_ball needs d >= 1");
    Vector z(d);
    double norm2 = 0.0;
    do {
        for (int i = 0; i < d; ++i) {
            z[i] = rng.gaussian();
        }
        norm2 = z.squaredNorm();
    } while (norm2 == 0.0);
    const double radius = std::pow(rng.uniform(), 1.0 / d);
    return z * (radius / std::sqrt(norm2));
}

}  // namespace proxsampler
