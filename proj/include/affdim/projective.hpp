#pragma once

// Directions in the plane modulo pi (the projective line RP^1), arcs of
// directions, and the action of invertible 2x2 matrices on them. A planar
// cone K with K and -K meeting only at 0 is the same thing as an arc of
// directions of length < pi.

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "affdim/errors.hpp"
#include "affdim/linalg.hpp"

namespace affdim {

inline constexpr double kPi = std::numbers::pi;

/// Reduce an angle to [0, pi).
inline double wrap_direction(double theta) noexcept {
    double r = std::fmod(theta, kPi);
    if (r < 0.0) r += kPi;
    if (r >= kPi) r = 0.0;
    return r;
}

/// Counterclockwise distance from `from` to `to` on RP^1, in [0, pi).
inline double ccw_distance(double from, double to) noexcept { return wrap_direction(to - from); }

/// Arc of directions {theta mod pi : lo <= theta <= hi}, 0 < hi - lo < pi, lo in [0, pi).
class ProjectiveInterval {
public:
    ProjectiveInterval() = default;

    ProjectiveInterval(double lo, double hi) {
        const double len = hi - lo;
        if (!(len > 0.0) || !(len < kPi)) throw InputError("projective interval length must lie in (0, pi)");
        lo_ = wrap_direction(lo);
        len_ = len;
    }

    static ProjectiveInterval from_start_length(double start, double length) {
        return ProjectiveInterval(start, start + length);
    }

    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return lo_ + len_; }
    double length() const noexcept { return len_; }
    double center() const noexcept { return lo_ + 0.5 * len_; }

    bool contains(double theta) const noexcept { return ccw_distance(lo_, theta) <= len_; }

    /// Grow by `margin` on both ends; nullopt if the result would not be a proper arc.
    std::optional<ProjectiveInterval> expanded(double margin) const {
        const double len = len_ + 2.0 * margin;
        if (!(len > 0.0) || !(len < kPi)) return std::nullopt;
        return ProjectiveInterval(lo_ - margin, lo_ - margin + len);
    }

private:
    double lo_ = 0.0;
    double len_ = kPi / 2;
};

/// Margins by which `inner` sits inside `outer` at its two ends; negative when
/// an end pokes out.
struct ArcClearance {
    double at_lo = -1.0;
    double at_hi = -1.0;
    double min() const noexcept { return std::min(at_lo, at_hi); }
};

inline ArcClearance clearance(const ProjectiveInterval& inner, const ProjectiveInterval& outer) noexcept {
    double off = ccw_distance(outer.lo(), inner.lo());
    // an inner arc starting just before outer.lo shows up with off close to pi
    if (off > outer.length() && off > 0.5 * (kPi + outer.length())) off -= kPi;
    ArcClearance c;
    c.at_lo = off;
    c.at_hi = outer.length() - (off + inner.length());
    return c;
}

/// Direction of A (cos theta, sin theta), reduced mod pi.
inline double induced_projective_map(const Matrix& a, double theta) {
    if (a.dim() != 2) throw InputError("projective action is defined for 2x2 matrices only");
    const double c = std::cos(theta), s = std::sin(theta);
    const double x = a(0, 0) * c + a(0, 1) * s;
    const double y = a(1, 0) * c + a(1, 1) * s;
    return wrap_direction(std::atan2(y, x));
}

/// Image of an arc: the arc between the endpoint images, traversed with the
/// orientation of det A.
inline ProjectiveInterval image_of(const Matrix& a, const ProjectiveInterval& arc) {
    const double p = induced_projective_map(a, arc.lo());
    const double q = induced_projective_map(a, arc.hi());
    const double det = determinant(a);
    if (det == 0.0) throw InputError("projective action needs an invertible matrix");
    double start = det > 0.0 ? p : q;
    double len = det > 0.0 ? ccw_distance(p, q) : ccw_distance(q, p);
    if (len <= 0.0) len = std::numeric_limits<double>::min();
    return ProjectiveInterval::from_start_length(start, len);
}

/// Bound on the angular error of one induced_projective_map evaluation:
/// a fixed floor plus a few ulps scaled by the condition number of A.
inline double angle_roundoff(const Matrix& a) {
    const SingularValues sv = singular_values(a);
    const double kappa = a.frobenius_norm() / sv.smallest();
    return 1e-12 + 16.0 * std::numeric_limits<double>::epsilon() * kappa;
}

/// Cone pair K' inside K: gap is the angular clearance of K' in K, c the
/// exported supermultiplicativity constant and c_vector the single-vector
/// constant (||B w|| >= c_vector ||B|| for w in K'); c = c_vector^2.
struct ConePair {
    ProjectiveInterval outer;
    ProjectiveInterval inner;
    double gap = 0.0;
    double c = 0.0;
    double c_vector = 0.0;
};

}  // namespace affdim
