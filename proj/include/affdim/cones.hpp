#pragma once

// Invariant cone pairs for planar tuples and the certified lower bounds on
// pressure that they give.
//
// Constant. Let K = [a, b] with opening beta = b - a <= pi/2, K' inside K with
// clearance gamma at both ends, and B a matrix mapping K into K' u -K'. Write
// e_a, e_b for the unit edge vectors of K. Because K is connected, B e_a and
// B e_b land in the same component of K' u -K', whose opening is below pi/2,
// so <B e_a, B e_b> >= 0. A unit w in K' is x e_a + y e_b with
// x, y >= sin(gamma) / sin(beta), hence
//     ||B w||^2 >= (sin gamma / sin beta)^2 (||B e_a||^2 + ||B e_b||^2).
// A unit v = p e_a + q e_b has p^2 + q^2 <= 1 / (1 - cos beta) (smallest
// eigenvalue of the Gram matrix of e_a, e_b), so
//     ||B||^2 <= (||B e_a||^2 + ||B e_b||^2) / (1 - cos beta).
// Together: ||B w|| >= c_v ||B|| with c_v = sin(gamma) / sqrt(1 + cos beta).
// Applying this twice, ||B1 B2|| >= ||B1 (B2 w)|| >= c_v^2 ||B1|| ||B2||.
// In d = 2, phi^s(B) = ||B||^{2-s} |det B|^{s-1} on [1, 2], ||B||^s on
// [0, 1] and |det B|^{s/2} above 2, so with c = c_v^2 <= 1,
//     phi^s(B1 B2) >= c phi^s(B1) phi^s(B2)   for every s >= 0.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "affdim/errors.hpp"
#include "affdim/linalg.hpp"
#include "affdim/pressure.hpp"
#include "affdim/projective.hpp"
#include "affdim/tuple.hpp"

namespace affdim {

inline constexpr double kDefaultMinGap = 1e-3;

struct ConeConstant {
    /// K after shrinking to opening <= pi/2.
    ProjectiveInterval outer;
    double gap = 0.0;
    double c_vector = 0.0;
    double c = 0.0;
};

/// Constructive supermultiplicativity constant for K' inside K (see file comment).
inline ConeConstant supermultiplicativity_constant(const ProjectiveInterval& outer,
                                                   const ProjectiveInterval& inner) {
    const ArcClearance cl = clearance(inner, outer);
    if (!(cl.min() > 0.0)) throw InputError("inner cone must lie in the interior of the outer cone");
    if (!(inner.length() < kPi / 2)) throw InputError("inner cone opening must be below pi/2");
    double at_lo = cl.at_lo;
    double at_hi = cl.at_hi;
    if (outer.length() > kPi / 2) {
        const double g = std::min({at_lo, at_hi, 0.5 * (kPi / 2 - inner.length())});
        at_lo = g;
        at_hi = g;
    }
    ConeConstant out;
    out.outer = ProjectiveInterval(inner.lo() - at_lo, inner.hi() + at_hi);
    out.gap = std::min(at_lo, at_hi);
    const double beta = out.outer.length();
    out.c_vector = std::min(1.0, std::sin(out.gap) / std::sqrt(1.0 + std::cos(beta)));
    out.c = out.c_vector * out.c_vector;
    return out;
}

/// Certified check that A maps `outer` into `inner` u -`inner`: the endpoint
/// images are widened by their roundoff bound before testing containment.
inline bool maps_into(const Matrix& a, const ProjectiveInterval& outer, const ProjectiveInterval& inner) {
    const ProjectiveInterval img = image_of(a, outer);
    const double slack = angle_roundoff(a);
    const ArcClearance cl = clearance(img, inner);
    return cl.at_lo - slack > 0.0 && cl.at_hi - slack > 0.0;
}

inline bool verify_cone(const LinearTuple& t, const ConePair& pair) {
    if (t.dim() != 2) return false;
    if (!(clearance(pair.inner, pair.outer).min() > 0.0)) return false;
    for (int i = 0; i < t.size(); ++i)
        if (!maps_into(t[i], pair.outer, pair.inner)) return false;
    return true;
}

namespace detail {

// Smallest arc containing every image arc, measured from a reference
// direction; nullopt when the images do not fit in a proper arc.
inline std::optional<ProjectiveInterval> hull_of_images(const LinearTuple& t, const ProjectiveInterval& k,
                                                        double reference) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < t.size(); ++i) {
        const ProjectiveInterval img = image_of(t[i], k);
        const double off = ccw_distance(reference, img.lo());
        if (off + img.length() >= kPi) return std::nullopt;
        lo = std::min(lo, off);
        hi = std::max(hi, off + img.length());
    }
    if (!(hi - lo < kPi)) return std::nullopt;
    return ProjectiveInterval(reference + lo, reference + std::max(hi, lo + 1e-300));
}

inline std::optional<ProjectiveInterval> hull_of_images(const LinearTuple& t, const ProjectiveInterval& k) {
    return hull_of_images(t, k, k.center() - kPi / 2);
}

// Directions after pushing a 256-point grid forward through deterministic
// pseudo-random words; they accumulate on the projective limit set. The grid
// is offset so that it avoids the coordinate axes, which are fixed (possibly
// repelling) directions of diagonal maps.
inline std::vector<double> forward_orbit_directions(const LinearTuple& t, int rounds) {
    constexpr int kGrid = 256;
    std::vector<double> pts(kGrid);
    for (int j = 0; j < kGrid; ++j) pts[static_cast<std::size_t>(j)] = kPi * (j + 0.3819660112501051) / kGrid;
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    auto next_symbol = [&] {
        state ^= state >> 12;
        state ^= state << 25;
        state ^= state >> 27;
        return static_cast<int>((state * 0x2545f4914f6cdd1dull) >> 33) % t.size();
    };
    for (int r = 0; r < rounds; ++r)
        for (double& p : pts) p = induced_projective_map(t[next_symbol()], p);
    return pts;
}

// Minimal arc containing a set of directions: complement of the widest gap.
inline std::optional<ProjectiveInterval> minimal_arc(std::vector<double> dirs) {
    std::sort(dirs.begin(), dirs.end());
    double widest = kPi - dirs.back() + dirs.front();
    std::size_t start = 0;
    for (std::size_t j = 1; j < dirs.size(); ++j) {
        const double g = dirs[j] - dirs[j - 1];
        if (g > widest) {
            widest = g;
            start = j;
        }
    }
    const double len = kPi - widest;
    if (!(len < kPi - 1e-9)) return std::nullopt;
    return ProjectiveInterval(dirs[start], dirs[start] + std::max(len, 1e-9));
}

// Build the pair for outer arc K: K' is the image hull widened by a third of
// its clearance, leaving room for perturbations of the maps.
inline std::optional<ConePair> pair_for(const LinearTuple& t, const ProjectiveInterval& k, double min_gap) {
    const auto img = hull_of_images(t, k);
    if (!img) return std::nullopt;
    const ArcClearance cl = clearance(*img, k);
    const double raw = cl.min();
    if (!(raw > 0.0)) return std::nullopt;
    const auto inner = img->expanded(raw / 3.0);
    if (!inner || !(inner->length() < kPi / 2)) return std::nullopt;
    const ConeConstant cc = supermultiplicativity_constant(k, *inner);
    if (cc.gap < min_gap) return std::nullopt;
    ConePair pair{cc.outer, *inner, cc.gap, cc.c, cc.c_vector};
    if (!verify_cone(t, pair)) return std::nullopt;
    return pair;
}

}  // namespace detail

/// Search for K, K' with every A_i mapping K into K' u -K' (d = 2 only).
///
/// Seeds a candidate arc from forward orbits of a 256-direction grid, then
/// iterates K <- hull(K u images of K) until the images land strictly inside.
/// Arcs of several lengths and offsets around that one are then scored and the
/// pair with the largest constant is kept. Returns nullopt when nothing is found.
inline std::optional<ConePair> find_invariant_cone(const LinearTuple& t, int max_iter = 200,
                                                   double min_gap = kDefaultMinGap) {
    if (t.dim() != 2) throw InputError("cone search supports d = 2 only");
    if (max_iter < 1) throw InputError("max_iter must be >= 1");
    const auto seed = detail::minimal_arc(detail::forward_orbit_directions(t, 64));
    if (!seed) return std::nullopt;
    auto cand = seed->expanded(std::max(min_gap, 0.05 * seed->length()));
    if (!cand) return std::nullopt;

    std::optional<ProjectiveInterval> settled;
    for (int it = 0; it < max_iter && cand; ++it) {
        const auto img = detail::hull_of_images(t, *cand);
        if (!img) return std::nullopt;
        if (clearance(*img, *cand).min() > 0.0) {
            settled = cand;
            break;
        }
        // union of the candidate and its image, then a small widening
        const double ref = cand->center() - kPi / 2;
        const double lo = std::min(ccw_distance(ref, cand->lo()), ccw_distance(ref, img->lo()));
        const double hi = std::max(ccw_distance(ref, cand->lo()) + cand->length(),
                                   ccw_distance(ref, img->lo()) + img->length());
        if (!(hi - lo < kPi - 1e-9)) return std::nullopt;
        cand = ProjectiveInterval(ref + lo, ref + hi).expanded(std::max(min_gap, 1e-3 * (hi - lo)));
    }
    if (!settled) return std::nullopt;

    std::optional<ConePair> best;
    auto consider = [&](const ProjectiveInterval& k) {
        const auto p = detail::pair_for(t, k, min_gap);
        if (p && (!best || p->c > best->c)) best = p;
    };
    const double shortest = 0.25 * settled->length();
    const double longest = std::min(kPi - 1e-2, std::max(kPi / 2, 1.5 * settled->length()));
    for (int shift = -4; shift <= 4; ++shift) {
        const double center = settled->center() + shift * settled->length() / 16.0;
        for (int j = 0; j <= 24; ++j) {
            const double len = shortest + (longest - shortest) * j / 24.0;
            consider(ProjectiveInterval(center - len / 2, center + len / 2));
        }
    }
    consider(*settled);
    return best;
}

/// L_n = (log c_eff + S_n) / n <= P(T, s) (Svf) or M(T, s) (Norm).
///
/// c_eff = c for Svf. For Norm, ||B1 B2||^s >= c^s ||B1||^s ||B2||^s, and
/// c^s >= c only when s <= 1, so c_eff = c^max(1, s).
inline double pressure_lower_cone(const LinearTuple& t, double s, int n, const ConePair& pair, Potential pot,
                                  const PartitionOptions& opt = {}) {
    if (t.dim() != 2) throw InputError("cone lower bounds support d = 2 only");
    if (!verify_cone(t, pair)) {
        throw InputError("cone membership check failed: a map does not send K into K' u -K'");
    }
    const double log_c = pot == Potential::Svf ? std::log(pair.c) : std::max(1.0, s) * std::log(pair.c);
    return (log_c + partition_sum(t, s, n, pot, opt)) / n;
}

enum class ConeMode { Auto, Off };

/// Upper bound min_k S_k / k together with the best available lower bound:
/// max_k L_k from a cone pair (d = 2), or the exact value for similarities.
inline PressureBounds pressure_bounds(const LinearTuple& t, double s, int n, Potential pot, ConeMode mode,
                                      const PartitionOptions& opt = {}) {
    if (n < 1) throw InputError("n must be >= 1");
    std::vector<double> sums;
    for (int k = 1; k <= n; ++k) sums.push_back(partition_sum(t, s, k, pot, opt));

    PressureBounds out;
    out.s = s;
    out.n = n;
    out.quantity = quantity_of(pot);
    out.alpha_star = t.alpha_star();
    out.alpha_sup = t.alpha_sup();
    out.upper = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= n; ++k) {
        const double v = sums[static_cast<std::size_t>(k - 1)] / k;
        if (v < out.upper) {
            out.upper = v;
            out.argmin_level = k;
        }
    }
    if (mode == ConeMode::Off) return out;
    if (t.is_conformal()) {
        // phi^s(A(i)) = prod r^s exactly, so S_k / k does not depend on k
        out.lower = std::min(sums.front(), out.upper);
        out.lower_method = BoundMethod::ExactConformal;
        return out;
    }
    if (t.dim() != 2) return out;
    const auto pair = find_invariant_cone(t);
    if (!pair || !verify_cone(t, *pair)) return out;
    const double log_c = pot == Potential::Svf ? std::log(pair->c) : std::max(1.0, s) * std::log(pair->c);
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= n; ++k) best = std::max(best, (log_c + sums[static_cast<std::size_t>(k - 1)]) / k);
    out.lower = best;
    out.lower_method = BoundMethod::ConeCertified;
    out.cone = pair;
    return out;
}

}  // namespace affdim
