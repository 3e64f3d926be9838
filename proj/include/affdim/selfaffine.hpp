#pragma once

// Self-affine sets at desk scale: chaos-game sampling, the ellipsoid covers
// E_k = union of f_{i_1} o ... o f_{i_k}(B_R), ball covers of those
// ellipsoids, box counting and the random-translation experiment.
//
// Ball cover of one ellipsoid. Let the ellipsoid have semi-axes R a_1 >= ...
// >= R a_d (a_j the singular values of the linear part) and let
// p = floor(s), so a_{p+1} is the first axis not fully resolved at exponent s.
// The box with sides 2 R a_j in the principal frame is tiled by cubes of side
// R a_{p+1}:
//     ceil(2 a_j / a_{p+1})  <= 3 a_j / a_{p+1}   for j <= p,
//     ceil(2 a_j / a_{p+1})  <= 2                 for j >  p,
// and each cube sits in a ball of radius r = sqrt(d) R a_{p+1} / 2. Summing
// r^s over the cubes (radius convention for Hausdorff content) gives
//     count * r^s <= 3^p 2^(d-p) (sqrt(d) R / 2)^s * phi^s(A)
// so C_{R,d}(s) = 3^p 2^(d-p) (sqrt(d) R / 2)^s.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "affdim/dimension.hpp"
#include "affdim/errors.hpp"
#include "affdim/linalg.hpp"
#include "affdim/pressure.hpp"
#include "affdim/tuple.hpp"

namespace affdim {

using Vector = std::vector<double>;

inline double euclidean_norm(std::span<const double> v) noexcept {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// IFS {A_i x + t_i} with strictly contracting linear parts.
class AffineIFS {
public:
    AffineIFS(LinearTuple linear, std::vector<Vector> translations)
        : linear_(std::move(linear)), translations_(std::move(translations)) {
        if (static_cast<int>(translations_.size()) != linear_.size()) {
            throw InputError("need exactly one translation per map");
        }
        for (const auto& t : translations_) {
            if (static_cast<int>(t.size()) != linear_.dim()) throw InputError("translation has the wrong dimension");
            for (double x : t)
                if (!std::isfinite(x)) throw InputError("translation has non-finite entries");
        }
        require_contractive(linear_);
    }

    const LinearTuple& linear() const noexcept { return linear_; }
    const std::vector<Vector>& translations() const noexcept { return translations_; }
    int dim() const noexcept { return linear_.dim(); }
    int size() const noexcept { return linear_.size(); }

    /// R = max ||t_i|| / (1 - max ||A_i||), so every f_i maps B_R into itself;
    /// 1 when all translations vanish.
    double radius() const noexcept {
        double tmax = 0.0;
        for (const auto& t : translations_) tmax = std::max(tmax, euclidean_norm(t));
        const double r = tmax / (1.0 - linear_.alpha_sup());
        return r > 0.0 ? r : 1.0;
    }

    void apply(int i, std::span<double> x) const {
        const Matrix& a = linear_[i];
        const auto& t = translations_[static_cast<std::size_t>(i)];
        const int d = dim();
        double tmp[kMaxDim];
        for (int r = 0; r < d; ++r) {
            double acc = t[static_cast<std::size_t>(r)];
            for (int c = 0; c < d; ++c) acc += a(r, c) * x[static_cast<std::size_t>(c)];
            tmp[r] = acc;
        }
        for (int r = 0; r < d; ++r) x[static_cast<std::size_t>(r)] = tmp[r];
    }

private:
    LinearTuple linear_;
    std::vector<Vector> translations_;
};

struct PointCloud {
    int dim = 2;
    /// Row-major coordinates, dim per point.
    std::vector<double> coords;
    double radius = 0.0;

    std::size_t count() const noexcept { return dim > 0 ? coords.size() / static_cast<std::size_t>(dim) : 0; }
    std::span<const double> point(std::size_t k) const noexcept {
        return {coords.data() + k * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim)};
    }
};

inline constexpr int kDefaultBurnIn = 64;

/// x <- f_i(x) with i uniform, starting at the origin; the first burn_in
/// iterates are dropped.
inline PointCloud chaos_game(const AffineIFS& ifs, std::size_t count, int burn_in, std::uint64_t seed) {
    if (count < 1) throw InputError("count must be >= 1");
    if (burn_in < 0) throw InputError("burn_in must be >= 0");
    const int d = ifs.dim();
    PointCloud cloud;
    cloud.dim = d;
    cloud.radius = ifs.radius();
    cloud.coords.reserve(count * static_cast<std::size_t>(d));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, ifs.size() - 1);
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    for (int k = 0; k < burn_in; ++k) ifs.apply(pick(rng), x);
    for (std::size_t k = 0; k < count; ++k) {
        ifs.apply(pick(rng), x);
        cloud.coords.insert(cloud.coords.end(), x.begin(), x.end());
    }
    return cloud;
}

/// center + shape * (unit ball).
struct Ellipsoid {
    Vector center;
    Matrix shape;

    bool contains(std::span<const double> x, double slack = 1e-9) const {
        Vector diff(center.size());
        for (std::size_t j = 0; j < center.size(); ++j) diff[j] = x[j] - center[j];
        return euclidean_norm(solve(shape, diff)) <= 1.0 + slack;
    }

    /// Support function h(u) = <center, u> + ||shape^T u||.
    double support(std::span<const double> u) const {
        double c = 0.0;
        for (std::size_t j = 0; j < center.size(); ++j) c += center[j] * u[j];
        return c + euclidean_norm(shape.transposed().apply(u));
    }
};

struct EllipsoidCover {
    int level = 0;
    double radius = 0.0;
    /// One per word (i_1 ... i_k) in lexicographic order.
    std::vector<Ellipsoid> pieces;
};

namespace detail {

inline void check_word_cap(int m, int k, std::uint64_t cap) {
    if (k < 0) throw InputError("level k must be >= 0");
    if (word_count(m, k) > cap) throw ResourceError("level " + std::to_string(k) + " exceeds the word cap");
}

// Linear part and offset of f_{i_1} o ... o f_{i_k} for all words, in
// lexicographic order: extending by i maps (L, c) to (L A_i, c + L t_i).
template <class Visit>
void for_each_composition(const AffineIFS& ifs, int k, Visit&& visit) {
    const int d = ifs.dim();
    auto rec = [&](auto&& self, const Matrix& lin, const Vector& off, int depth) -> void {
        if (depth == k) {
            visit(lin, off);
            return;
        }
        for (int i = 0; i < ifs.size(); ++i) {
            Vector next = lin.apply(ifs.translations()[static_cast<std::size_t>(i)]);
            for (int j = 0; j < d; ++j) next[static_cast<std::size_t>(j)] += off[static_cast<std::size_t>(j)];
            self(self, lin * ifs.linear()[i], next, depth + 1);
        }
    };
    rec(rec, Matrix::identity(d), Vector(static_cast<std::size_t>(d), 0.0), 0);
}

}  // namespace detail

inline EllipsoidCover ellipsoid_cover(const AffineIFS& ifs, int k, std::uint64_t cap = kDefaultLeafCap) {
    detail::check_word_cap(ifs.size(), k, cap);
    EllipsoidCover cover;
    cover.level = k;
    cover.radius = ifs.radius();
    detail::for_each_composition(ifs, k, [&](const Matrix& lin, const Vector& off) {
        cover.pieces.push_back({off, cover.radius * lin});
    });
    return cover;
}

struct CoveringCount {
    std::uint64_t ball_count = 0;
    /// C_{R,d}(s) * sum_{|i| = k} phi^s(A_{i_1} ... A_{i_k}).
    double content_bound = 0.0;
    /// sum over the actual cubes of r^s; never exceeds content_bound.
    double direct_content = 0.0;
    double constant = 0.0;
};

/// C_{R,d}(s) = 3^p 2^(d-p) (sqrt(d) R / 2)^s with p = floor(s).
inline double content_constant(int d, double radius, double s) {
    const int p = static_cast<int>(std::floor(s));
    return std::pow(3.0, p) * std::pow(2.0, d - p) * std::pow(std::sqrt(static_cast<double>(d)) * radius / 2.0, s);
}

inline CoveringCount covering_count(const AffineIFS& ifs, int k, double s, std::uint64_t cap = kDefaultLeafCap) {
    const int d = ifs.dim();
    if (!(s >= 0.0) || !(s < d)) throw InputError("covering count needs 0 <= s < d");
    detail::check_word_cap(ifs.size(), k, cap);
    const double radius = ifs.radius();
    const int p = static_cast<int>(std::floor(s));
    const double root_d = std::sqrt(static_cast<double>(d));
    CoveringCount out;
    out.constant = content_constant(d, radius, s);
    double svf_sum = 0.0;
    detail::for_each_composition(ifs, k, [&](const Matrix& lin, const Vector&) {
        const SingularValues sv = singular_values(lin);
        const double side = sv[p];
        std::uint64_t cubes = 1;
        for (int j = 0; j < d; ++j) {
            // tolerate rounding when a_j == side exactly
            const auto per_axis = static_cast<std::uint64_t>(std::ceil(2.0 * sv[j] / side * (1.0 - 1e-12)));
            if (per_axis != 0 && cubes > std::numeric_limits<std::uint64_t>::max() / per_axis) {
                throw ResourceError("cube count overflows 64 bits");
            }
            cubes *= per_axis;
        }
        if (out.ball_count > std::numeric_limits<std::uint64_t>::max() - cubes) {
            throw ResourceError("cube count overflows 64 bits");
        }
        out.ball_count += cubes;
        out.direct_content += static_cast<double>(cubes) * std::pow(root_d * radius * side / 2.0, s);
        svf_sum += svf(sv, s);
    });
    out.content_bound = out.constant * svf_sum;
    return out;
}

struct BoxEstimate {
    double slope = 0.0;
    double std_error = 0.0;
    std::vector<double> deltas;
    std::vector<std::uint64_t> counts;
    /// N(delta_lo) > count / 10: the finest grid is undersampled.
    bool undersampled = false;
};

struct BoundingBox {
    Vector lo;
    Vector hi;
    double max_extent() const {
        double e = 0.0;
        for (std::size_t j = 0; j < lo.size(); ++j) e = std::max(e, hi[j] - lo[j]);
        return e;
    }
};

inline BoundingBox bounding_box(const PointCloud& cloud) {
    if (cloud.count() == 0) throw InputError("empty point cloud");
    BoundingBox b;
    b.lo.assign(static_cast<std::size_t>(cloud.dim), std::numeric_limits<double>::infinity());
    b.hi.assign(static_cast<std::size_t>(cloud.dim), -std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < cloud.count(); ++k) {
        const auto x = cloud.point(k);
        for (std::size_t j = 0; j < x.size(); ++j) {
            b.lo[j] = std::min(b.lo[j], x[j]);
            b.hi[j] = std::max(b.hi[j], x[j]);
        }
    }
    return b;
}

/// Number of occupied cells of the delta-grid anchored at the box's low corner.
inline std::uint64_t occupied_cells(const PointCloud& cloud, const BoundingBox& box, double delta) {
    const int d = cloud.dim;
    std::vector<std::uint64_t> radix(static_cast<std::size_t>(d));
    std::uint64_t span = 1;
    for (int j = 0; j < d; ++j) {
        const double cells = std::floor((box.hi[static_cast<std::size_t>(j)] - box.lo[static_cast<std::size_t>(j)]) / delta) + 1.0;
        if (cells > 4e9) throw InputError("grid too fine for 64-bit cell indices");
        radix[static_cast<std::size_t>(j)] = static_cast<std::uint64_t>(cells);
        if (span > std::numeric_limits<std::uint64_t>::max() / radix[static_cast<std::size_t>(j)]) {
            throw InputError("grid too fine for 64-bit cell indices");
        }
        span *= radix[static_cast<std::size_t>(j)];
    }
    std::vector<std::uint64_t> keys(cloud.count());
    for (std::size_t k = 0; k < cloud.count(); ++k) {
        const auto x = cloud.point(k);
        std::uint64_t key = 0;
        for (int j = 0; j < d; ++j) {
            const auto c = static_cast<std::uint64_t>((x[static_cast<std::size_t>(j)] - box.lo[static_cast<std::size_t>(j)]) / delta);
            key = key * radix[static_cast<std::size_t>(j)] + std::min(c, radix[static_cast<std::size_t>(j)] - 1);
        }
        keys[k] = key;
    }
    std::sort(keys.begin(), keys.end());
    return static_cast<std::uint64_t>(std::unique(keys.begin(), keys.end()) - keys.begin());
}

/// Least-squares slope of log N(delta) against log(1/delta) over `levels`
/// geometrically spaced deltas in [delta_lo, delta_hi].
inline BoxEstimate box_dimension_estimate(const PointCloud& cloud, double delta_lo, double delta_hi, int levels) {
    if (!(delta_lo > 0.0) || !(delta_lo < delta_hi)) throw InputError("need 0 < delta_lo < delta_hi");
    if (levels < 2) throw InputError("need at least two grid levels");
    const BoundingBox box = bounding_box(cloud);
    BoxEstimate out;
    std::vector<double> xs, ys;
    for (int j = 0; j < levels; ++j) {
        const double delta = delta_lo * std::pow(delta_hi / delta_lo, static_cast<double>(j) / (levels - 1));
        const std::uint64_t n = occupied_cells(cloud, box, delta);
        out.deltas.push_back(delta);
        out.counts.push_back(n);
        xs.push_back(-std::log(delta));
        ys.push_back(std::log(static_cast<double>(n)));
    }
    out.undersampled = static_cast<double>(out.counts.front()) > static_cast<double>(cloud.count()) / 10.0;
    const double k = static_cast<double>(levels);
    double mx = 0.0, my = 0.0;
    for (int j = 0; j < levels; ++j) {
        mx += xs[static_cast<std::size_t>(j)];
        my += ys[static_cast<std::size_t>(j)];
    }
    mx /= k;
    my /= k;
    double sxx = 0.0, sxy = 0.0;
    for (int j = 0; j < levels; ++j) {
        sxx += (xs[static_cast<std::size_t>(j)] - mx) * (xs[static_cast<std::size_t>(j)] - mx);
        sxy += (xs[static_cast<std::size_t>(j)] - mx) * (ys[static_cast<std::size_t>(j)] - my);
    }
    out.slope = sxy / sxx;
    if (levels > 2) {
        double rss = 0.0;
        for (int j = 0; j < levels; ++j) {
            const double r = ys[static_cast<std::size_t>(j)] - my - out.slope * (xs[static_cast<std::size_t>(j)] - mx);
            rss += r * r;
        }
        out.std_error = std::sqrt(rss / (k - 2.0) / sxx);
    }
    return out;
}

/// Square grid x grid occupancy raster over the cloud's bounding square,
/// row 0 at the top; 255 = occupied.
inline std::vector<std::uint8_t> occupancy_raster(const PointCloud& cloud, int grid) {
    if (cloud.dim != 2) throw InputError("rasters are only drawn for planar clouds");
    if (grid < 1) throw InputError("grid must be >= 1");
    const BoundingBox box = bounding_box(cloud);
    double side = box.max_extent();
    if (!(side > 0.0)) side = 1.0;
    std::vector<std::uint8_t> img(static_cast<std::size_t>(grid) * static_cast<std::size_t>(grid), 0);
    for (std::size_t k = 0; k < cloud.count(); ++k) {
        const auto x = cloud.point(k);
        const int cx = std::min(grid - 1, static_cast<int>((x[0] - box.lo[0]) / side * grid));
        const int cy = std::min(grid - 1, static_cast<int>((x[1] - box.lo[1]) / side * grid));
        img[static_cast<std::size_t>(grid - 1 - cy) * static_cast<std::size_t>(grid) + static_cast<std::size_t>(cx)] = 255;
    }
    return img;
}

/// Binary PGM: "P5\n<w> <h>\n255\n" followed by row-major bytes.
inline void write_pgm(std::ostream& os, std::span<const std::uint8_t> pixels, int width, int height) {
    if (static_cast<std::size_t>(width) * static_cast<std::size_t>(height) != pixels.size()) {
        throw InputError("raster size does not match its dimensions");
    }
    os << "P5\n" << width << ' ' << height << "\n255\n";
    os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

struct FalconerTrial {
    std::vector<Vector> translations;
    BoxEstimate box;
};

struct FalconerSummary {
    std::vector<FalconerTrial> trials;
    double affinity_upper = 0.0;
    std::optional<double> affinity_lower;
    double median_box = 0.0;
    /// median |box estimate - affinity upper|
    double median_abs_deviation = 0.0;
};

struct FalconerParams {
    int trials = 20;
    std::size_t points = 1000000;
    std::uint64_t seed = 1;
    /// Level for the affinity-dimension bounds.
    int level = 8;
    /// Box-counting range as fractions of the attractor's bounding-box side.
    double rel_delta_lo = 1.0 / 512.0;
    double rel_delta_hi = 1.0 / 16.0;
    int box_levels = 6;
};

inline double median(std::vector<double> v) {
    if (v.empty()) throw InputError("median of an empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Random-translation experiment for planar tuples with ||A_i|| < 1/2:
/// translations uniform in [0, 1]^{2m}, one chaos game and box estimate per
/// draw. Reports distributional summaries only.
inline FalconerSummary falconer_experiment(const LinearTuple& t, const FalconerParams& prm) {
    if (t.dim() != 2) throw InputError("the translation experiment is planar (d = 2)");
    for (int i = 0; i < t.size(); ++i) {
        if (!(t.singular_values_of(i).largest() < 0.5)) {
            throw InputError("map " + std::to_string(i + 1) +
                             " violates ||A_i|| < 1/2, required for almost-sure equality with the affinity dimension");
        }
    }
    if (prm.trials < 1) throw InputError("trials must be >= 1");
    FalconerSummary out;
    const DimensionBounds dims = affinity_dimension_bounds(t, prm.level, true);
    out.affinity_upper = dims.upper;
    out.affinity_lower = dims.lower;
    std::vector<double> estimates, deviations;
    for (int k = 0; k < prm.trials; ++k) {
        std::mt19937_64 rng(prm.seed + static_cast<std::uint64_t>(k));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<Vector> tr(static_cast<std::size_t>(t.size()), Vector(2));
        for (auto& v : tr)
            for (double& x : v) x = unit(rng);
        const AffineIFS ifs(t, tr);
        const PointCloud cloud = chaos_game(ifs, prm.points, kDefaultBurnIn, rng());
        const double side = bounding_box(cloud).max_extent();
        BoxEstimate box = box_dimension_estimate(cloud, side * prm.rel_delta_lo, side * prm.rel_delta_hi, prm.box_levels);
        estimates.push_back(box.slope);
        deviations.push_back(std::abs(box.slope - out.affinity_upper));
        out.trials.push_back({tr, std::move(box)});
    }
    out.median_box = median(estimates);
    out.median_abs_deviation = median(deviations);
    return out;
}

}  // namespace affdim
