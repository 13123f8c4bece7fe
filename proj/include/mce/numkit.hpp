#pragma once

// Small dense linear algebra: the problems handled here have n <= ~20, so
// everything is plain loops over contiguous storage.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "mce/errors.hpp"

namespace mce {

using Vector = std::vector<double>;

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const noexcept {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<const double> data() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Square symmetric matrix. Writes go through set(), which keeps both
/// triangles identical.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {
        if (dim == 0) throw DimensionError("SymMatrix dimension must be positive");
    }

    static SymMatrix identity(std::size_t dim) {
        SymMatrix a(dim);
        for (std::size_t i = 0; i < dim; ++i) a.set(i, i, 1.0);
        return a;
    }

    static SymMatrix diagonal(std::span<const double> d) {
        SymMatrix a(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) a.set(i, i, d[i]);
        return a;
    }

    std::size_t dim() const noexcept { return dim_; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * dim_ + j]; }

    void set(std::size_t i, std::size_t j, double v) noexcept {
        data_[i * dim_ + j] = v;
        data_[j * dim_ + i] = v;
    }
    void add(std::size_t i, std::size_t j, double v) noexcept {
        data_[i * dim_ + j] += v;
        if (i != j) data_[j * dim_ + i] += v;
    }

    double trace() const noexcept {
        double t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) t += (*this)(i, i);
        return t;
    }

    double frobenius_norm() const noexcept {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    /// Rank-one update  A += w * x x^T.
    void add_outer(std::span<const double> x, double w) noexcept {
        assert(x.size() == dim_);
        for (std::size_t i = 0; i < dim_; ++i) {
            const double wi = w * x[i];
            for (std::size_t j = i; j < dim_; ++j) add(i, j, wi * x[j]);
        }
    }

    Vector multiply(std::span<const double> x) const {
        Vector y(dim_, 0.0);
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j) y[i] += (*this)(i, j) * x[j];
        return y;
    }

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

inline double norm_inf(std::span<const double> a) noexcept {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    Vector d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    return d;
}

inline double distance2(std::span<const double> a, std::span<const double> b) {
    return norm2(subtract(a, b));
}

/// Solve A x = b for symmetric positive definite A by Cholesky.
/// Throws SingularMatrix when a pivot is not safely positive, i.e. when the
/// factorization cannot certify definiteness at working precision.
inline Vector solve_sym(const SymMatrix& a, std::span<const double> b) {
    const std::size_t n = a.dim();
    if (b.size() != n) throw DimensionError("solve_sym: right-hand side has wrong length");

    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
    const double pivot_floor =
        static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag;

    // Lower factor, row-major.
    std::vector<double> l(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = a(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= l[j * n + k] * l[j * n + k];
        if (!(d > pivot_floor)) throw SingularMatrix();
        const double ljj = std::sqrt(d);
        l[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
            l[i * n + j] = s / ljj;
        }
    }

    Vector x(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < i; ++k) x[i] -= l[i * n + k] * x[k];
        x[i] /= l[i * n + i];
    }
    for (std::size_t i = n; i-- > 0;) {
        for (std::size_t k = i + 1; k < n; ++k) x[i] -= l[k * n + i] * x[k];
        x[i] /= l[i * n + i];
    }
    return x;
}

struct EigenDecomposition {
    Vector values;   // ascending
    Matrix vectors;  // column j is the unit eigenvector of values[j]
};

/// Cyclic Jacobi eigen-decomposition. Sweeps stop once the off-diagonal
/// Frobenius mass falls to 1e-14 * ||A||_F.
inline EigenDecomposition eig_sym(const SymMatrix& a_in) {
    const std::size_t n = a_in.dim();
    std::vector<double> a(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a[i * n + j] = a_in(i, j);
    Matrix v(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;

    const double threshold = 1e-14 * a_in.frobenius_norm();
    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j) s += a[i * n + j] * a[i * n + j];
        return std::sqrt(s);
    };

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps && off_norm() > threshold; ++sweep) {
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a[p * n + q];
                if (apq == 0.0) continue;
                const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k * n + p];
                    const double akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p * n + k];
                    const double aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a[i * n + i] < a[j * n + j]; });

    EigenDecomposition out{Vector(n), Matrix(n, n)};
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a[order[j] * n + order[j]];
        for (std::size_t k = 0; k < n; ++k) out.vectors(k, j) = v(k, order[j]);
    }
    return out;
}

struct EigenExtremes {
    double lambda_min;
    double lambda_max;
};

inline EigenExtremes eig_extremes(const SymMatrix& a) {
    const auto e = eig_sym(a);
    return {e.values.front(), e.values.back()};
}

}  // namespace mce
