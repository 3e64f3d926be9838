#pragma once

// Small dense real matrices (d <= 8) and the singular-value quantities built
// on them: singular values, the singular value function, exterior norms and
// spectral-radius bounds. All logarithms in the library are natural.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "affdim/errors.hpp"

namespace affdim {

inline constexpr int kMaxDim = 8;

/// Relative nondegeneracy threshold: |det A| must exceed this times alpha_1(A)^d.
inline constexpr double kInvertibilityTolerance = 1e-14;

class Matrix {
public:
    Matrix() = default;

    explicit Matrix(int d) : d_(d) {
        if (d < 1 || d > kMaxDim) {
            throw InputError("matrix dimension must be in [1, " + std::to_string(kMaxDim) +
                             "], got " + std::to_string(d));
        }
    }

    static Matrix identity(int d) {
        Matrix m(d);
        for (int i = 0; i < d; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix diagonal(std::initializer_list<double> values) {
        Matrix m(static_cast<int>(values.size()));
        int i = 0;
        for (double v : values) {
            m(i, i) = v;
            ++i;
        }
        return m;
    }

    /// Row-major nested input; every row must have length equal to the row count.
    static Matrix from_rows(const std::vector<std::vector<double>>& rows) {
        Matrix m(static_cast<int>(rows.size()));
        for (int i = 0; i < m.d_; ++i) {
            if (static_cast<int>(rows[static_cast<std::size_t>(i)].size()) != m.d_) {
                throw InputError("matrix rows must all have length " + std::to_string(m.d_));
            }
            for (int j = 0; j < m.d_; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        }
        return m;
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        std::vector<std::vector<double>> nested;
        for (const auto& r : rows) nested.emplace_back(r);
        return from_rows(nested);
    }

    static Matrix rotation(double theta) {
        Matrix m(2);
        m(0, 0) = std::cos(theta);
        m(0, 1) = -std::sin(theta);
        m(1, 0) = std::sin(theta);
        m(1, 1) = std::cos(theta);
        return m;
    }

    int dim() const noexcept { return d_; }

    double& operator()(int i, int j) noexcept { return a_[static_cast<std::size_t>(i * kMaxDim + j)]; }
    double operator()(int i, int j) const noexcept { return a_[static_cast<std::size_t>(i * kMaxDim + j)]; }

    bool is_finite() const noexcept {
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j)
                if (!std::isfinite((*this)(i, j))) return false;
        return true;
    }

    double frobenius_norm() const noexcept {
        double s = 0.0;
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) s += (*this)(i, j) * (*this)(i, j);
        return std::sqrt(s);
    }

    double max_abs_entry() const noexcept {
        double s = 0.0;
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) s = std::max(s, std::abs((*this)(i, j)));
        return s;
    }

    double trace() const noexcept {
        double t = 0.0;
        for (int i = 0; i < d_; ++i) t += (*this)(i, i);
        return t;
    }

    Matrix transposed() const {
        Matrix t(d_);
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    Matrix& operator*=(double k) noexcept {
        for (int i = 0; i < d_; ++i)
            for (int j = 0; j < d_; ++j) (*this)(i, j) *= k;
        return *this;
    }

    friend Matrix operator*(double k, Matrix m) noexcept { return m *= k; }

    friend Matrix operator+(const Matrix& x, const Matrix& y) {
        check_same_dim(x, y);
        Matrix r(x.d_);
        for (int i = 0; i < x.d_; ++i)
            for (int j = 0; j < x.d_; ++j) r(i, j) = x(i, j) + y(i, j);
        return r;
    }

    friend Matrix operator*(const Matrix& x, const Matrix& y) {
        check_same_dim(x, y);
        const int d = x.d_;
        Matrix r(d);
        if (d == 2) {
            r(0, 0) = x(0, 0) * y(0, 0) + x(0, 1) * y(1, 0);
            r(0, 1) = x(0, 0) * y(0, 1) + x(0, 1) * y(1, 1);
            r(1, 0) = x(1, 0) * y(0, 0) + x(1, 1) * y(1, 0);
            r(1, 1) = x(1, 0) * y(0, 1) + x(1, 1) * y(1, 1);
            return r;
        }
        for (int i = 0; i < d; ++i)
            for (int k = 0; k < d; ++k) {
                const double xik = x(i, k);
                for (int j = 0; j < d; ++j) r(i, j) += xik * y(k, j);
            }
        return r;
    }

    /// Matrix-vector product; v.size() must equal dim().
    std::vector<double> apply(std::span<const double> v) const {
        std::vector<double> r(static_cast<std::size_t>(d_), 0.0);
        for (int i = 0; i < d_; ++i) {
            double acc = 0.0;
            for (int j = 0; j < d_; ++j) acc += (*this)(i, j) * v[static_cast<std::size_t>(j)];
            r[static_cast<std::size_t>(i)] = acc;
        }
        return r;
    }

    friend bool operator==(const Matrix& x, const Matrix& y) noexcept {
        if (x.d_ != y.d_) return false;
        for (int i = 0; i < x.d_; ++i)
            for (int j = 0; j < x.d_; ++j)
                if (x(i, j) != y(i, j)) return false;
        return true;
    }

private:
    static void check_same_dim(const Matrix& x, const Matrix& y) {
        if (x.d_ != y.d_) throw InputError("matrix dimension mismatch");
    }

    int d_ = 0;
    std::array<double, kMaxDim * kMaxDim> a_{};
};

/// Singular values alpha_1 >= ... >= alpha_d.
class SingularValues {
public:
    SingularValues() = default;
    explicit SingularValues(int d) : d_(d) {}

    int dim() const noexcept { return d_; }
    double operator[](int i) const noexcept { return v_[static_cast<std::size_t>(i)]; }
    double& operator[](int i) noexcept { return v_[static_cast<std::size_t>(i)]; }
    std::span<const double> values() const noexcept { return {v_.data(), static_cast<std::size_t>(d_)}; }

    double largest() const noexcept { return v_[0]; }
    double smallest() const noexcept { return v_[static_cast<std::size_t>(d_ - 1)]; }

    double product() const noexcept {
        double p = 1.0;
        for (int i = 0; i < d_; ++i) p *= v_[static_cast<std::size_t>(i)];
        return p;
    }

private:
    int d_ = 0;
    std::array<double, kMaxDim> v_{};
};

namespace detail {

inline void require_finite(const Matrix& a) {
    if (a.dim() < 1) throw InputError("empty matrix");
    if (!a.is_finite()) throw InputError("matrix has non-finite entries");
}

// Closed form for 2x2: with p = |(a+d, c-b)| and q = |(a-d, c+b)|,
// alpha_1 = (p+q)/2 and alpha_2 = |det|/alpha_1.
inline SingularValues singular_values_2x2(const Matrix& m) {
    const double a = m(0, 0), b = m(0, 1), c = m(1, 0), d = m(1, 1);
    const double p = std::hypot(a + d, c - b);
    const double q = std::hypot(a - d, c + b);
    SingularValues sv(2);
    sv[0] = 0.5 * (p + q);
    const double det = std::abs(a * d - b * c);
    sv[1] = sv[0] > 0.0 ? det / sv[0] : 0.0;
    if (sv[1] > sv[0]) sv[1] = sv[0];
    return sv;
}

// One-sided (Hestenes) cyclic Jacobi: plane rotations chosen from the entries
// of A^T A, applied to the columns of A. Column norms converge to the
// singular values.
inline SingularValues singular_values_jacobi(const Matrix& m) {
    const int d = m.dim();
    Matrix u = m;
    constexpr double eps = 1e-15;
    for (int sweep = 0; sweep < 80; ++sweep) {
        bool rotated = false;
        for (int p = 0; p < d - 1; ++p) {
            for (int q = p + 1; q < d; ++q) {
                double alpha = 0.0, beta = 0.0, gamma = 0.0;
                for (int i = 0; i < d; ++i) {
                    alpha += u(i, p) * u(i, p);
                    beta += u(i, q) * u(i, q);
                    gamma += u(i, p) * u(i, q);
                }
                if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
                rotated = true;
                const double zeta = (beta - alpha) / (2.0 * gamma);
                const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (int i = 0; i < d; ++i) {
                    const double up = u(i, p);
                    const double uq = u(i, q);
                    u(i, p) = c * up - s * uq;
                    u(i, q) = s * up + c * uq;
                }
            }
        }
        if (!rotated) break;
    }
    SingularValues sv(d);
    for (int j = 0; j < d; ++j) {
        double n = 0.0;
        for (int i = 0; i < d; ++i) n += u(i, j) * u(i, j);
        sv[j] = std::sqrt(n);
    }
    std::array<double, kMaxDim> tmp{};
    for (int j = 0; j < d; ++j) tmp[static_cast<std::size_t>(j)] = sv[j];
    std::sort(tmp.begin(), tmp.begin() + d, std::greater<>());
    for (int j = 0; j < d; ++j) sv[j] = tmp[static_cast<std::size_t>(j)];
    return sv;
}

inline SingularValues singular_values_unchecked(const Matrix& a) {
    switch (a.dim()) {
        case 1: {
            SingularValues sv(1);
            sv[0] = std::abs(a(0, 0));
            return sv;
        }
        case 2:
            return singular_values_2x2(a);
        default:
            return singular_values_jacobi(a);
    }
}

inline bool nondegenerate(const SingularValues& sv) noexcept {
    if (!(sv.smallest() > 0.0)) return false;
    // product of alpha_j / alpha_1 compared without forming alpha_1^d
    double ratio = 1.0;
    for (int j = 1; j < sv.dim(); ++j) ratio *= sv[j] / sv.largest();
    return ratio > kInvertibilityTolerance;
}

}  // namespace detail

/// Singular values in descending order. Closed form for d = 2, Jacobi otherwise.
inline SingularValues singular_values(const Matrix& a) {
    detail::require_finite(a);
    return detail::singular_values_unchecked(a);
}

inline bool is_invertible(const Matrix& a) {
    if (a.dim() < 1 || !a.is_finite()) return false;
    return detail::nondegenerate(detail::singular_values_unchecked(a));
}

/// Determinant by Gaussian elimination with partial pivoting.
inline double determinant(const Matrix& a) {
    detail::require_finite(a);
    const int d = a.dim();
    if (d == 1) return a(0, 0);
    if (d == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    Matrix m = a;
    double det = 1.0;
    for (int k = 0; k < d; ++k) {
        int piv = k;
        for (int i = k + 1; i < d; ++i)
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
        if (m(piv, k) == 0.0) return 0.0;
        if (piv != k) {
            for (int j = 0; j < d; ++j) std::swap(m(k, j), m(piv, j));
            det = -det;
        }
        det *= m(k, k);
        for (int i = k + 1; i < d; ++i) {
            const double f = m(i, k) / m(k, k);
            for (int j = k; j < d; ++j) m(i, j) -= f * m(k, j);
        }
    }
    return det;
}

/// Solve A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(const Matrix& a, std::span<const double> b) {
    const int d = a.dim();
    if (static_cast<int>(b.size()) != d) throw InputError("right-hand side has the wrong length");
    Matrix m = a;
    std::vector<double> x(b.begin(), b.end());
    for (int k = 0; k < d; ++k) {
        int piv = k;
        for (int i = k + 1; i < d; ++i)
            if (std::abs(m(i, k)) > std::abs(m(piv, k))) piv = i;
        if (m(piv, k) == 0.0) throw NumericalError("singular system");
        if (piv != k) {
            for (int j = 0; j < d; ++j) std::swap(m(k, j), m(piv, j));
            std::swap(x[static_cast<std::size_t>(k)], x[static_cast<std::size_t>(piv)]);
        }
        for (int i = k + 1; i < d; ++i) {
            const double f = m(i, k) / m(k, k);
            for (int j = k; j < d; ++j) m(i, j) -= f * m(k, j);
            x[static_cast<std::size_t>(i)] -= f * x[static_cast<std::size_t>(k)];
        }
    }
    for (int i = d - 1; i >= 0; --i) {
        double acc = x[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < d; ++j) acc -= m(i, j) * x[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(i)] = acc / m(i, i);
    }
    return x;
}

/// log phi^s from precomputed singular values. For s >= d this is (s/d) log|det|,
/// with |det| taken as the product of the singular values.
inline double log_svf(const SingularValues& sv, double s) noexcept {
    const int d = sv.dim();
    if (s >= d) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += std::log(sv[j]);
        return (s / d) * acc;
    }
    const int m = static_cast<int>(std::floor(s));
    double acc = 0.0;
    for (int j = 0; j < m; ++j) acc += std::log(sv[j]);
    const double frac = s - m;
    if (frac > 0.0) acc += frac * std::log(sv[m]);
    return acc;
}

/// phi^s from precomputed singular values.
inline double svf(const SingularValues& sv, double s) noexcept {
    const int d = sv.dim();
    if (s >= d) return std::pow(sv.product(), s / d);
    const int m = static_cast<int>(std::floor(s));
    double acc = 1.0;
    for (int j = 0; j < m; ++j) acc *= sv[j];
    const double frac = s - m;
    if (frac > 0.0) acc *= std::pow(sv[m], frac);
    return acc;
}

inline void check_svf_args(const SingularValues& sv, double s) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InputError("s must be a finite value >= 0");
    if (!detail::nondegenerate(sv)) throw InputError("matrix is singular (relative threshold 1e-14)");
}

/// Singular value function phi^s(A); requires A invertible and s >= 0.
inline double svf(const Matrix& a, double s) {
    const SingularValues sv = singular_values(a);
    check_svf_args(sv, s);
    return svf(sv, s);
}

/// ||A||_k = alpha_1 ... alpha_k.
inline double exterior_norm(const Matrix& a, int k) {
    if (k < 1 || k > a.dim()) {
        throw InputError("exterior power k must lie in [1, " + std::to_string(a.dim()) + "]");
    }
    const SingularValues sv = singular_values(a);
    double p = 1.0;
    for (int j = 0; j < k; ++j) p *= sv[j];
    return p;
}

struct SpectralRadiusBounds {
    double lo = 0.0;
    double hi = 0.0;
};

/// lo = (|tr A^k| / d)^(1/k) <= rho(A) <= ||A^k||^(1/k) = hi, k a power of two.
///
/// A^k is formed by repeated squaring with a running log-scale, so large k
/// cannot overflow; a product that degenerates to zero or a non-finite value
/// raises NumericalError.
inline SpectralRadiusBounds spectral_radius_bounds(const Matrix& a, std::uint64_t k) {
    detail::require_finite(a);
    if (k == 0 || !std::has_single_bit(k)) throw InputError("power k must be a positive power of two");
    const int d = a.dim();
    Matrix b = a;
    double log_scale = 0.0;
    auto renormalize = [&] {
        const double f = b.max_abs_entry();
        if (!(f > 0.0) || !std::isfinite(f)) throw NumericalError("matrix power degenerated during squaring");
        b *= 1.0 / f;
        log_scale += std::log(f);
    };
    renormalize();
    for (std::uint64_t p = 1; p < k; p *= 2) {
        b = b * b;
        log_scale *= 2.0;
        renormalize();
    }
    const double kk = static_cast<double>(k);
    const double norm = detail::singular_values_unchecked(b).largest();
    const double tr = std::abs(b.trace());
    SpectralRadiusBounds out;
    out.hi = std::exp((log_scale + std::log(norm)) / kk);
    out.lo = tr > 0.0 ? std::exp((log_scale + std::log(tr / d)) / kk) : 0.0;
    return out;
}

}  // namespace affdim
