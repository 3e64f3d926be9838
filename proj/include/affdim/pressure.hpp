#pragma once

// Partition sums over words and subadditive upper bounds on the SVF pressure
// P(A, s) and the matrix pressure M(A, s).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "affdim/errors.hpp"
#include "affdim/linalg.hpp"
#include "affdim/projective.hpp"
#include "affdim/tuple.hpp"

namespace affdim {

enum class Potential { Svf, Norm };

enum class Quantity { SvfPressure, MatrixPressure };

enum class BoundMethod { SubadditiveInf, ConeCertified, VariationalMC, ExactConformal };

inline const char* to_string(BoundMethod m) noexcept {
    switch (m) {
        case BoundMethod::SubadditiveInf: return "subadditive-inf";
        case BoundMethod::ConeCertified: return "cone-certified";
        case BoundMethod::VariationalMC: return "variational-mc";
        case BoundMethod::ExactConformal: return "exact-conformal";
    }
    return "unknown";
}

inline Quantity quantity_of(Potential p) noexcept {
    return p == Potential::Svf ? Quantity::SvfPressure : Quantity::MatrixPressure;
}

inline constexpr std::uint64_t kDefaultLeafCap = std::uint64_t{1} << 24;

struct PartitionOptions {
    std::uint64_t leaf_cap = kDefaultLeafCap;
    /// Depth at which the word tree is cut into independent subtrees.
    int split_depth = 4;
    /// 0 means std::thread::hardware_concurrency().
    unsigned workers = 1;
};

struct PressureBounds {
    double s = 0.0;
    /// Deepest level used.
    int n = 0;
    /// Level attaining the upper bound.
    int argmin_level = 0;
    double upper = 0.0;
    std::optional<double> lower;
    Quantity quantity = Quantity::SvfPressure;
    BoundMethod upper_method = BoundMethod::SubadditiveInf;
    std::optional<BoundMethod> lower_method;
    std::optional<ConePair> cone;
    double alpha_star = 0.0;
    double alpha_sup = 0.0;
};

/// log of the per-word weight: log phi^s(B) or s log ||B||.
inline double log_weight(const SingularValues& sv, double s, Potential pot) noexcept {
    return pot == Potential::Svf ? log_svf(sv, s) : s * std::log(sv.largest());
}

namespace detail {

class WordTreeSum {
public:
    WordTreeSum(const LinearTuple& t, double s, int n, Potential pot, double log_scale)
        : t_(t), s_(s), n_(n), pot_(pot), log_scale_(log_scale) {
        for (int i = 0; i < t.size(); ++i) det_.push_back(determinant(t[i]));
    }

    // Sum over all completions of a prefix product at the given depth. Each
    // node's value is the in-order sum of its children, so the reduction tree
    // is fixed by the word tree alone. The determinant travels with the
    // product because a*d - b*c cancels badly once products are near rank one.
    double subtree(const Matrix& prefix, double det, int depth) const {
        if (depth == n_) return leaf(prefix, det);
        double acc = 0.0;
        for (int i = 0; i < t_.size(); ++i)
            acc += subtree(t_[i] * prefix, det_[static_cast<std::size_t>(i)] * det, depth + 1);
        return acc;
    }

    double leaf(const Matrix& product, double det) const {
        SingularValues sv = singular_values_unchecked(product);
        if (product.dim() == 2 && sv[0] > 0.0) sv[1] = std::min(sv[0], std::abs(det) / sv[0]);
        if (!std::isfinite(sv.largest()) || !(sv.smallest() > 0.0)) {
            throw NumericalError("word product became singular or non-finite");
        }
        return std::exp(log_weight(sv, s_, pot_) - log_scale_);
    }

    double det_of(int i) const noexcept { return det_[static_cast<std::size_t>(i)]; }

private:
    const LinearTuple& t_;
    double s_;
    int n_;
    Potential pot_;
    double log_scale_;
    std::vector<double> det_;
};

inline void check_partition_args(const LinearTuple& t, double s, int n, std::uint64_t cap) {
    if (t.size() < 1) throw InputError("empty tuple");
    if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("s must be a finite value >= 0");
    if (n < 1) throw InputError("level n must be >= 1");
    if (word_count(t.size(), n) > cap) {
        throw ResourceError("level " + std::to_string(n) + " needs " + std::to_string(t.size()) + "^" +
                            std::to_string(n) + " words, over the leaf cap " + std::to_string(cap));
    }
}

struct Prefix {
    Matrix product;
    double det = 1.0;
};

inline std::vector<Prefix> prefix_products(const LinearTuple& t, const WordTreeSum& tree, int depth) {
    std::vector<Prefix> level{{Matrix::identity(t.dim()), 1.0}};
    for (int k = 0; k < depth; ++k) {
        std::vector<Prefix> next;
        next.reserve(level.size() * static_cast<std::size_t>(t.size()));
        for (const Prefix& p : level)
            for (int i = 0; i < t.size(); ++i) next.push_back({t[i] * p.product, tree.det_of(i) * p.det});
        level = std::move(next);
    }
    return level;
}

}  // namespace detail

/// S_n = log sum_{|i| = n} w(A(i)) with w = phi^s (Svf) or ||.||^s (Norm).
///
/// Leaves are scaled by W^{-n}, W = max_i w(A_i), so every scaled leaf is
/// at most 1. The result is bit-identical for any worker count.
inline double partition_sum(const LinearTuple& t, double s, int n, Potential pot,
                            const PartitionOptions& opt = {}) {
    detail::check_partition_args(t, s, n, opt.leaf_cap);
    double log_w = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < t.size(); ++i) log_w = std::max(log_w, log_weight(t.singular_values_of(i), s, pot));
    const double log_scale = n * log_w;

    const detail::WordTreeSum tree(t, s, n, pot, log_scale);
    const int split = std::clamp(opt.split_depth, 0, n);
    const std::vector<detail::Prefix> prefixes = detail::prefix_products(t, tree, split);
    std::vector<double> partial(prefixes.size(), 0.0);

    unsigned workers = opt.workers == 0 ? std::max(1u, std::thread::hardware_concurrency()) : opt.workers;
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, prefixes.size()));
    if (workers <= 1) {
        for (std::size_t j = 0; j < prefixes.size(); ++j)
            partial[j] = tree.subtree(prefixes[j].product, prefixes[j].det, split);
    } else {
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t j = w; j < prefixes.size(); j += workers) {
                        partial[j] = tree.subtree(prefixes[j].product, prefixes[j].det, split);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    // Fold the top `split` levels of the tree in the same grouping the
    // recursion uses below the cut.
    const auto m = static_cast<std::size_t>(t.size());
    while (partial.size() > 1) {
        std::vector<double> up(partial.size() / m, 0.0);
        for (std::size_t g = 0; g < up.size(); ++g) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += partial[g * m + i];
            up[g] = acc;
        }
        partial = std::move(up);
    }
    const double total = partial.front();
    if (!(total > 0.0) || !std::isfinite(total)) throw NumericalError("partition sum underflowed");
    return log_scale + std::log(total);
}

/// upper = min_{1 <= n <= n_max} S_n / n, a rigorous upper bound by subadditivity.
inline PressureBounds pressure_upper(const LinearTuple& t, double s, int n_max, Potential pot,
                                     const PartitionOptions& opt = {}) {
    if (n_max < 1) throw InputError("n_max must be >= 1");
    PressureBounds out;
    out.s = s;
    out.n = n_max;
    out.quantity = quantity_of(pot);
    out.alpha_star = t.alpha_star();
    out.alpha_sup = t.alpha_sup();
    out.upper = std::numeric_limits<double>::infinity();
    for (int n = 1; n <= n_max; ++n) {
        const double v = partition_sum(t, s, n, pot, opt) / n;
        if (v < out.upper) {
            out.upper = v;
            out.argmin_level = n;
        }
    }
    return out;
}

struct SlopeBracket {
    double slope_lo = 0.0;  ///< log alpha_*
    double slope_hi = 0.0;  ///< log alpha^*
};

/// S_n(s) + n ds log alpha_* <= S_n(s + ds) <= S_n(s) + n ds log alpha^*.
inline SlopeBracket lipschitz_bracket(const LinearTuple& t, double s, double ds) {
    if (!(ds > 0.0)) throw InputError("ds must be > 0");
    if (!(s >= 0.0)) throw InputError("s must be >= 0");
    return {std::log(t.alpha_star()), std::log(t.alpha_sup())};
}

}  // namespace affdim
