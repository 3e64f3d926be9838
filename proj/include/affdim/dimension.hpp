#pragma once

// Root finding on top of the pressure bounds: similarity dimension, two-sided
// bounds on the affinity dimension and joint spectral radius bounds.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affdim/cones.hpp"
#include "affdim/errors.hpp"
#include "affdim/linalg.hpp"
#include "affdim/pressure.hpp"
#include "affdim/tuple.hpp"

namespace affdim {

inline constexpr double kSimilarityTolerance = 1e-12;
inline constexpr double kRootTolerance = 1e-10;

struct RootBracket {
    double lo = 0.0;
    double hi = 0.0;
};

/// Bracket [lo, hi] of width <= tol around the root of a strictly decreasing
/// f on [lo, hi] with f(lo) >= 0 >= f(hi); f(lo) > 0 >= f(hi) is maintained.
inline RootBracket bisect_bracket(const std::function<double(double)>& f, double lo, double hi, double tol) {
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (f(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return {lo, hi};
}

inline double bisect_decreasing(const std::function<double(double)>& f, double lo, double hi, double tol) {
    const RootBracket b = bisect_bracket(f, lo, hi, tol);
    return 0.5 * (b.lo + b.hi);
}

/// Unique s >= 0 with sum r_i^s = 1.
inline double similarity_dimension(std::span<const double> ratios) {
    if (ratios.empty()) throw InputError("need at least one ratio");
    double rmax = 0.0;
    for (double r : ratios) {
        if (!(r > 0.0) || !(r < 1.0)) throw InputError("similarity ratios must lie in (0, 1)");
        rmax = std::max(rmax, r);
    }
    if (ratios.size() == 1) return 0.0;
    auto f = [&](double s) {
        double acc = 0.0;
        for (double r : ratios) acc += std::pow(r, s);
        return acc - 1.0;
    };
    // sum r_i^s <= m rmax^s, which is 1 at the point below
    const double hi = std::log(static_cast<double>(ratios.size())) / -std::log(rmax) + 1.0;
    return bisect_decreasing(f, 0.0, hi, kSimilarityTolerance);
}

inline void require_contractive(const LinearTuple& t) {
    for (int i = 0; i < t.size(); ++i) {
        if (!(t.singular_values_of(i).largest() < 1.0)) {
            throw InputError("map " + std::to_string(i + 1) + " is not a strict contraction (||A_i|| >= 1)");
        }
    }
}

namespace detail {

// Root of s -> offset + S_n(s) on [0, 2d]; offset <= 0 shifts the root down.
// Returns the end of the final bracket on the requested side.
inline double partition_root(const LinearTuple& t, int n, double offset, const PartitionOptions& opt,
                             bool upper_end = true) {
    auto f = [&](double s) { return offset + partition_sum(t, s, n, Potential::Svf, opt); };
    const double cap = 2.0 * t.dim();
    if (f(0.0) <= 0.0) return 0.0;
    if (f(cap) > 0.0) throw NumericalError("pressure root exceeds the sanity cap 2d");
    const RootBracket b = bisect_bracket(f, 0.0, cap, kRootTolerance);
    return upper_end ? b.hi : b.lo;
}

}  // namespace detail

/// s_n, the root of S_n(T, s) = 0. An upper bound for the affinity dimension
/// because P <= S_n / n and both decrease in s.
inline double affinity_dimension_upper(const LinearTuple& t, int n, const PartitionOptions& opt = {}) {
    if (n < 1) throw InputError("n must be >= 1");
    require_contractive(t);
    return detail::partition_root(t, n, 0.0, opt);
}

/// Where the root of P can lie given lower <= P(s0) <= upper and slopes of P
/// in [log alpha_*, log alpha^*] (both negative for contractions).
inline RootBracket root_bracket_from_pressure(double s0, double lower, double upper, const SlopeBracket& slopes) {
    const double steep = -slopes.slope_lo;    // |log alpha_*|
    const double shallow = -slopes.slope_hi;  // |log alpha^*|
    if (!(shallow > 0.0)) throw InputError("slope bracket needs a contractive tuple");
    RootBracket b;
    b.hi = s0 + (upper <= 0.0 ? upper / steep : upper / shallow);
    b.lo = s0 + (lower >= 0.0 ? lower / steep : lower / shallow);
    return b;
}

struct DimensionBounds {
    double upper = 0.0;
    std::optional<double> lower;
    int n = 0;
    BoundMethod upper_method = BoundMethod::SubadditiveInf;
    std::optional<BoundMethod> lower_method;
    std::optional<ConePair> cone;
    /// Set when a lower bound was requested but none could be produced.
    std::string warning;
};

/// Two-sided bounds on the affinity dimension.
///
/// upper: root of S_n. lower (when requested): root of log c + S_n for a cone
/// pair (d = 2), or the exact root for similarities. Both sides are then
/// intersected with the slope bracket evaluated at their midpoint.
inline DimensionBounds affinity_dimension_bounds(const LinearTuple& t, int n, bool use_cone,
                                                 const PartitionOptions& opt = {}) {
    DimensionBounds out;
    out.n = n;
    out.upper = affinity_dimension_upper(t, n, opt);
    if (!use_cone) return out;

    double log_c = 0.0;
    if (t.is_conformal()) {
        // S_1 / 1 = P exactly for similarities
        out.lower = std::min(detail::partition_root(t, 1, 0.0, opt, false), out.upper);
        out.lower_method = BoundMethod::ExactConformal;
        return out;
    }
    if (t.dim() != 2) {
        out.warning = "certified lower bounds need d = 2";
        return out;
    }
    const auto pair = find_invariant_cone(t);
    if (!pair) {
        out.warning = "no invariant cone found; lower bound unavailable";
        return out;
    }
    log_c = std::log(pair->c);
    out.cone = pair;
    out.lower_method = BoundMethod::ConeCertified;
    double lower = std::min(detail::partition_root(t, n, log_c, opt, false), out.upper);

    const double s0 = 0.5 * (lower + out.upper);
    const double sn = partition_sum(t, s0, n, Potential::Svf, opt);
    const RootBracket br = root_bracket_from_pressure(s0, (log_c + sn) / n, sn / n, lipschitz_bracket(t, s0, 1.0));
    out.upper = std::min(out.upper, br.hi);
    lower = std::max(lower, std::max(0.0, br.lo));
    out.lower = std::min(lower, out.upper);
    return out;
}

struct JsrBounds {
    double lo = 0.0;
    double hi = 0.0;
};

/// lo = max over words |i| <= n_max of rho_lo(A(i))^{1/|i|},
/// hi = min_{n <= n_max} max_{|i| = n} ||A(i)||^{1/n}.
/// For a single matrix hi also uses ||A^k||^{1/k} at k = `power`.
inline JsrBounds joint_spectral_radius_bounds(const LinearTuple& t, int n_max, const PartitionOptions& opt = {},
                                              std::uint64_t power = std::uint64_t{1} << 40) {
    if (n_max < 1) throw InputError("n_max must be >= 1");
    std::uint64_t total = 0;
    for (int n = 1; n <= n_max; ++n) {
        const std::uint64_t c = word_count(t.size(), n);
        if (c > opt.leaf_cap || total > opt.leaf_cap - c) {
            throw ResourceError("JSR enumeration up to length " + std::to_string(n_max) + " exceeds the leaf cap");
        }
        total += c;
    }
    std::vector<double> max_norm(static_cast<std::size_t>(n_max + 1), 0.0);
    double lo = 0.0;
    auto visit = [&](auto&& self, const Matrix& p, int len) -> void {
        const SingularValues sv = detail::singular_values_unchecked(p);
        if (!std::isfinite(sv.largest())) throw NumericalError("word product overflowed");
        max_norm[static_cast<std::size_t>(len)] = std::max(max_norm[static_cast<std::size_t>(len)], sv.largest());
        lo = std::max(lo, std::pow(spectral_radius_bounds(p, power).lo, 1.0 / len));
        if (len == n_max) return;
        for (int i = 0; i < t.size(); ++i) self(self, t[i] * p, len + 1);
    };
    for (int i = 0; i < t.size(); ++i) visit(visit, t[i], 1);

    JsrBounds out;
    out.lo = lo;
    out.hi = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= n_max; ++n)
        out.hi = std::min(out.hi, std::pow(max_norm[static_cast<std::size_t>(n)], 1.0 / n));
    if (t.size() == 1) out.hi = std::min(out.hi, spectral_radius_bounds(t[0], power).hi);
    out.lo = std::min(out.lo, out.hi);
    return out;
}

}  // namespace affdim
