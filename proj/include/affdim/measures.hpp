#pragma once

// Bernoulli measures on the full shift: entropy, Monte Carlo Lyapunov
// exponents for planar tuples, the energy of the singular value potential
// and the (non-certified) variational lower bound on pressure.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "affdim/errors.hpp"
#include "affdim/linalg.hpp"
#include "affdim/projective.hpp"
#include "affdim/tuple.hpp"

namespace affdim {

class BernoulliWeights {
public:
    explicit BernoulliWeights(std::vector<double> p) : p_(std::move(p)) {
        if (p_.empty()) throw InputError("weights must be non-empty");
        double total = 0.0;
        for (double v : p_) {
            if (!(v > 0.0) || !std::isfinite(v)) throw InputError("weights must be positive and finite");
            total += v;
        }
        if (std::abs(total - 1.0) > 1e-12) throw InputError("weights must sum to 1");
    }

    static BernoulliWeights uniform(int m) {
        return BernoulliWeights(std::vector<double>(static_cast<std::size_t>(m), 1.0 / m));
    }

    int size() const noexcept { return static_cast<int>(p_.size()); }
    double operator[](int i) const noexcept { return p_[static_cast<std::size_t>(i)]; }
    const std::vector<double>& values() const noexcept { return p_; }

private:
    std::vector<double> p_;
};

/// h = -sum p_i log p_i (nats).
inline double entropy(const BernoulliWeights& p) noexcept {
    double h = 0.0;
    for (double v : p.values()) h -= v * std::log(v);
    return h;
}

enum class Splitting { Equal, Distinct, Undetermined };

inline const char* to_string(Splitting s) noexcept {
    switch (s) {
        case Splitting::Equal: return "equal";
        case Splitting::Distinct: return "distinct";
        case Splitting::Undetermined: return "undetermined";
    }
    return "unknown";
}

inline constexpr int kDirectionBins = 16;

struct BernoulliAnalysis {
    double h = 0.0;
    double lambda1 = 0.0;
    double lambda2 = 0.0;
    double stderr1 = 0.0;
    double stderr2 = 0.0;
    Splitting splitting = Splitting::Undetermined;
    /// Mean circular variance of the top direction of the backward products.
    double direction_variance = 1.0;
    /// Histogram over [0, pi) of the final top directions, one count per replica.
    std::optional<std::array<int, kDirectionBins>> directions;
    /// sum_i p_i log |det A_i|.
    double log_det_mean = 0.0;
    /// Energy estimate for `s` when filled by energy_estimate.
    double energy = 0.0;
    double energy_stderr = 0.0;
};

struct MonteCarloParams {
    int steps = 100000;
    int reps = 16;
    std::uint64_t seed = 1;
};

namespace detail {

// Top left singular direction of a 2x2 matrix, or nullopt when the two
// singular values coincide to working precision.
inline std::optional<double> top_direction(const Matrix& p) {
    const double a = p(0, 0) * p(0, 0) + p(0, 1) * p(0, 1);
    const double b = p(0, 0) * p(1, 0) + p(0, 1) * p(1, 1);
    const double d = p(1, 0) * p(1, 0) + p(1, 1) * p(1, 1);
    const double spread = std::hypot(a - d, 2.0 * b);
    if (!(spread > 1e-9 * (a + d))) return std::nullopt;
    return wrap_direction(0.5 * std::atan2(2.0 * b, a - d));
}

}  // namespace detail

/// Monte Carlo Lyapunov exponents of a planar tuple under a Bernoulli measure.
///
/// Each replica follows v_k = B v_{k-1} / ||B v_{k-1}|| with B drawn from p and
/// averages log ||B v_{k-1}|| - (1/2) log |det B|; adding back half the exact
/// mean log-determinant gives lambda1 (the subtracted term is a zero-mean
/// control variate, exact for similarities). lambda2 then follows from
/// lambda1 + lambda2 = sum p_i log |det A_i|. Replica r uses seed + r.
inline BernoulliAnalysis lyapunov_mc(const LinearTuple& t, const BernoulliWeights& p, int steps, int reps,
                                     std::uint64_t seed) {
    if (t.dim() != 2) throw InputError("Lyapunov estimation supports d = 2 only");
    if (p.size() != t.size()) throw InputError("weights and tuple differ in length");
    if (steps < 1000) throw InputError("steps must be >= 1000");
    if (reps < 8) throw InputError("reps must be >= 8");

    std::vector<double> log_det(static_cast<std::size_t>(t.size()));
    double log_det_mean = 0.0;
    for (int i = 0; i < t.size(); ++i) {
        log_det[static_cast<std::size_t>(i)] = std::log(std::abs(determinant(t[i])));
        log_det_mean += p[i] * log_det[static_cast<std::size_t>(i)];
    }

    const int tail = std::max(1, steps / 10);
    std::vector<double> rep_lambda(static_cast<std::size_t>(reps));
    std::array<int, kDirectionBins> hist{};
    double variance_sum = 0.0;
    for (int r = 0; r < reps; ++r) {
        std::mt19937_64 rng(seed + static_cast<std::uint64_t>(r));
        std::discrete_distribution<int> pick(p.values().begin(), p.values().end());
        std::uniform_real_distribution<double> angle(0.0, 2.0 * kPi);
        const double th = angle(rng);
        double vx = std::cos(th), vy = std::sin(th);
        Matrix backward = Matrix::identity(2);
        double acc = 0.0;
        double cx = 0.0, cy = 0.0;
        int counted = 0;
        std::optional<double> last_dir;
        for (int k = 0; k < steps; ++k) {
            const int i = pick(rng);
            const Matrix& b = t[i];
            const double wx = b(0, 0) * vx + b(0, 1) * vy;
            const double wy = b(1, 0) * vx + b(1, 1) * vy;
            const double len = std::hypot(wx, wy);
            acc += std::log(len) - 0.5 * log_det[static_cast<std::size_t>(i)];
            vx = wx / len;
            vy = wy / len;

            backward = backward * b;
            backward *= 1.0 / backward.max_abs_entry();
            if (k >= steps - tail) {
                last_dir = detail::top_direction(backward);
                if (last_dir) {
                    cx += std::cos(2.0 * *last_dir);
                    cy += std::sin(2.0 * *last_dir);
                }
                ++counted;
            }
        }
        rep_lambda[static_cast<std::size_t>(r)] = acc / steps + 0.5 * log_det_mean;
        variance_sum += 1.0 - std::hypot(cx, cy) / counted;
        if (last_dir) {
            const int bin = std::min(kDirectionBins - 1, static_cast<int>(*last_dir / kPi * kDirectionBins));
            ++hist[static_cast<std::size_t>(bin)];
        }
    }

    const double mean = std::accumulate(rep_lambda.begin(), rep_lambda.end(), 0.0) / reps;
    double ss = 0.0;
    for (double v : rep_lambda) ss += (v - mean) * (v - mean);
    const double se = std::sqrt(ss / (reps - 1) / reps);

    BernoulliAnalysis out;
    out.h = entropy(p);
    out.lambda1 = mean;
    out.lambda2 = log_det_mean - mean;
    out.stderr1 = se;
    out.stderr2 = se;
    out.log_det_mean = log_det_mean;
    out.direction_variance = variance_sum / reps;
    out.directions = hist;

    const double diff = out.lambda1 - out.lambda2;
    const double sigma = out.stderr1 + out.stderr2;
    if (diff > 5.0 * sigma && out.direction_variance < 0.1) {
        out.splitting = Splitting::Distinct;
    } else if (std::abs(diff) <= 2.0 * sigma + 1e-12 * (1.0 + std::abs(out.lambda1))) {
        out.splitting = Splitting::Equal;
    } else {
        out.splitting = Splitting::Undetermined;
    }
    return out;
}

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
};

/// Energy of the phi^s potential from the Lyapunov estimates (d = 2):
/// s l1 on [0, 1], l1 + (s - 1) l2 on [1, 2], (s / 2)(l1 + l2) above 2.
inline Estimate energy_estimate(double s, const BernoulliAnalysis& a) {
    if (!(s >= 0.0)) throw InputError("s must be >= 0");
    if (s <= 1.0) return {s * a.lambda1, s * a.stderr1};
    if (s <= 2.0) {
        // l1 + (s-1) l2 = (2-s) l1 + (s-1) log_det_mean, only l1 is sampled
        return {a.lambda1 + (s - 1.0) * a.lambda2, (2.0 - s) * a.stderr1};
    }
    return {0.5 * s * a.log_det_mean, 0.0};
}

inline BernoulliAnalysis& attach_energy(BernoulliAnalysis& a, double s) {
    const Estimate e = energy_estimate(s, a);
    a.energy = e.value;
    a.energy_stderr = e.std_error;
    return a;
}

struct VariationalBound {
    double value = 0.0;
    double std_error = 0.0;
    /// Always false: a Monte Carlo confidence bound, not a proof.
    bool certified = false;
};

/// h(p) + E - 3 stderr, a lower estimate for P(T, s) in expectation.
inline VariationalBound variational_lower(const LinearTuple& t, const BernoulliWeights& p, double s,
                                          const MonteCarloParams& mc) {
    const BernoulliAnalysis a = lyapunov_mc(t, p, mc.steps, mc.reps, mc.seed);
    const Estimate e = energy_estimate(s, a);
    return {a.h + e.value - 3.0 * e.std_error, e.std_error, false};
}

struct BernoulliOptimum {
    std::vector<double> weights;
    VariationalBound bound;
};

/// Best variational bound over the simplex lattice {k / resolution} with all
/// weights positive.
inline BernoulliOptimum optimize_bernoulli(const LinearTuple& t, double s, int resolution,
                                           const MonteCarloParams& mc) {
    const int m = t.size();
    if (resolution < m) throw InputError("resolution must be at least the number of maps");
    BernoulliOptimum best;
    best.bound.value = -std::numeric_limits<double>::infinity();
    std::vector<int> parts(static_cast<std::size_t>(m), 1);
    // enumerate compositions of `resolution` into m positive parts
    auto visit = [&](auto&& self, int idx, int remaining) -> void {
        if (idx == m - 1) {
            parts[static_cast<std::size_t>(idx)] = remaining;
            std::vector<double> w(static_cast<std::size_t>(m));
            for (int i = 0; i < m; ++i) w[static_cast<std::size_t>(i)] = static_cast<double>(parts[static_cast<std::size_t>(i)]) / resolution;
            double total = std::accumulate(w.begin(), w.end(), 0.0);
            for (double& v : w) v /= total;
            const VariationalBound b = variational_lower(t, BernoulliWeights(w), s, mc);
            if (b.value > best.bound.value) best = {w, b};
            return;
        }
        for (int k = 1; k <= remaining - (m - 1 - idx); ++k) {
            parts[static_cast<std::size_t>(idx)] = k;
            self(self, idx + 1, remaining - k);
        }
    };
    visit(visit, 0, resolution);
    return best;
}

}  // namespace affdim
