#pragma once

#include <algorithm>
#include <cstddef>
#include <initializer_list>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "affdim/errors.hpp"
#include "affdim/linalg.hpp"

namespace affdim {

/// A tuple (A_1, ..., A_m) of invertible d x d matrices sharing one dimension.
class LinearTuple {
public:
    LinearTuple() = default;

    explicit LinearTuple(std::vector<Matrix> maps) : maps_(std::move(maps)) {
        if (maps_.empty()) throw InputError("a linear tuple needs at least one matrix");
        d_ = maps_.front().dim();
        sv_.reserve(maps_.size());
        for (std::size_t i = 0; i < maps_.size(); ++i) {
            const Matrix& a = maps_[i];
            if (a.dim() != d_) throw InputError("all matrices in a tuple must share one dimension");
            if (!a.is_finite()) throw InputError("matrix " + std::to_string(i + 1) + " has non-finite entries");
            const SingularValues sv = singular_values(a);
            if (!detail::nondegenerate(sv)) throw InputError("matrix " + std::to_string(i + 1) + " is singular");
            sv_.push_back(sv);
        }
    }

    LinearTuple(std::initializer_list<Matrix> maps) : LinearTuple(std::vector<Matrix>(maps)) {}

    int dim() const noexcept { return d_; }
    int size() const noexcept { return static_cast<int>(maps_.size()); }
    const Matrix& operator[](int i) const noexcept { return maps_[static_cast<std::size_t>(i)]; }
    std::span<const Matrix> maps() const noexcept { return maps_; }
    const SingularValues& singular_values_of(int i) const noexcept { return sv_[static_cast<std::size_t>(i)]; }

    /// alpha_* = min_i alpha_d(A_i).
    double alpha_star() const noexcept {
        double v = std::numeric_limits<double>::infinity();
        for (const auto& sv : sv_) v = std::min(v, sv.smallest());
        return v;
    }

    /// alpha^* = max_i alpha_1(A_i).
    double alpha_sup() const noexcept {
        double v = 0.0;
        for (const auto& sv : sv_) v = std::max(v, sv.largest());
        return v;
    }

    bool is_contractive() const noexcept { return alpha_sup() < 1.0; }

    /// Every map is a similarity (alpha_1 = alpha_d up to relative tol).
    bool is_conformal(double tol = 1e-12) const noexcept {
        for (const auto& sv : sv_)
            if (sv.largest() - sv.smallest() > tol * sv.largest()) return false;
        return true;
    }

private:
    int d_ = 0;
    std::vector<Matrix> maps_;
    std::vector<SingularValues> sv_;
};

/// Finite word over {0, ..., m-1} (zero-based symbols).
using Word = std::vector<int>;

/// A(i) = A_{i_n} ... A_{i_1}: later symbols multiply on the left.
inline Matrix word_product(const LinearTuple& t, std::span<const int> word) {
    if (word.empty()) throw InputError("word must have length >= 1");
    Matrix p = Matrix::identity(t.dim());
    for (int sym : word) {
        if (sym < 0 || sym >= t.size()) throw InputError("word symbol out of range");
        p = t[sym] * p;
    }
    return p;
}

/// m^n, saturating at UINT64_MAX.
inline std::uint64_t word_count(int m, int n) noexcept {
    std::uint64_t c = 1;
    for (int k = 0; k < n; ++k) {
        if (c > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(m)) {
            return std::numeric_limits<std::uint64_t>::max();
        }
        c *= static_cast<std::uint64_t>(m);
    }
    return c;
}

}  // namespace affdim
