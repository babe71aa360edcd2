// Copyright 2026 The rbopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RBOPT_LINALG_HPP
#define RBOPT_LINALG_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "rbopt/error.hpp"

namespace rbopt {

/// Row-major dense matrix of finite doubles.
class DenseMatrix {
   public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
        : rows_(rows), cols_(cols), data_(std::move(entries)) {
        if (data_.size() != rows_ * cols_) throw Error(Errc::InvalidArgument, "entry count does not match shape");
    }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }
    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
        return out;
    }

    const std::vector<double>& entries() const noexcept { return data_; }

    DenseMatrix transpose() const {
        DenseMatrix t(cols_, rows_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
        return t;
    }

    std::vector<double> operator*(std::span<const double> x) const {
        if (x.size() != cols_) throw Error(Errc::InvalidArgument, "matrix-vector shape mismatch");
        std::vector<double> y(rows_, 0.0);
        for (std::size_t r = 0; r < rows_; ++r) {
            long double acc = 0.0L;
            for (std::size_t c = 0; c < cols_; ++c) acc += static_cast<long double>((*this)(r, c)) * x[c];
            y[r] = static_cast<double>(acc);
        }
        return y;
    }

    DenseMatrix operator*(const DenseMatrix& other) const {
        if (cols_ != other.rows_) throw Error(Errc::InvalidArgument, "matrix-matrix shape mismatch");
        DenseMatrix out(rows_, other.cols_);
        for (std::size_t r = 0; r < rows_; ++r)
            for (std::size_t c = 0; c < other.cols_; ++c) {
                long double acc = 0.0L;
                for (std::size_t k = 0; k < cols_; ++k) acc += static_cast<long double>((*this)(r, k)) * other(k, c);
                out(r, c) = static_cast<double>(acc);
            }
        return out;
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    bool operator==(const DenseMatrix&) const = default;

   private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

/// LU factorization with partial pivoting, carried out in extended precision.
class LuDecomposition {
   public:
    static constexpr double kPivotTolerance = 1e-12;

    explicit LuDecomposition(const DenseMatrix& a) : n_(a.rows()), lu_(a.rows() * a.rows()), perm_(a.rows()) {
        if (!a.square()) throw Error(Errc::InvalidArgument, "LU needs a square matrix");
        if (!a.all_finite()) throw Error(Errc::InvalidArgument, "matrix has non-finite entries");
        const double scale = max_abs(a.entries());
        if (n_ > 0 && scale == 0.0) throw Error(Errc::SingularMatrix, "zero matrix");
        for (std::size_t i = 0; i < n_ * n_; ++i) lu_[i] = a.entries()[i];
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t p = k;
            long double best = std::abs(at(k, k));
            for (std::size_t i = k + 1; i < n_; ++i) {
                if (std::abs(at(i, k)) > best) {
                    best = std::abs(at(i, k));
                    p = i;
                }
            }
            if (best <= kPivotTolerance * scale) {
                throw Error(Errc::SingularMatrix, "pivot below tolerance at column " + std::to_string(k));
            }
            if (p != k) {
                for (std::size_t c = 0; c < n_; ++c) std::swap(at(k, c), at(p, c));
                std::swap(perm_[k], perm_[p]);
            }
            for (std::size_t i = k + 1; i < n_; ++i) {
                const long double f = at(i, k) / at(k, k);
                at(i, k) = f;
                if (f == 0.0L) continue;
                for (std::size_t c = k + 1; c < n_; ++c) at(i, c) -= f * at(k, c);
            }
        }
    }

    std::size_t size() const noexcept { return n_; }

    std::vector<long double> solve_extended(std::span<const long double> b) const {
        std::vector<long double> x(n_);
        for (std::size_t i = 0; i < n_; ++i) x[i] = b[perm_[i]];
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = 0; k < i; ++k) x[i] -= at(i, k) * x[k];
        for (std::size_t i = n_; i-- > 0;) {
            for (std::size_t k = i + 1; k < n_; ++k) x[i] -= at(i, k) * x[k];
            x[i] /= at(i, i);
        }
        return x;
    }

   private:
    long double& at(std::size_t r, std::size_t c) { return lu_[r * n_ + c]; }
    long double at(std::size_t r, std::size_t c) const { return lu_[r * n_ + c]; }

    std::size_t n_;
    std::vector<long double> lu_;
    std::vector<std::size_t> perm_;
};

/// Solves A x = b with partial pivoting and one step of iterative refinement.
inline std::vector<double> solve_linear_system(const DenseMatrix& a, std::span<const double> b) {
    if (!a.square() || b.size() != a.rows()) throw Error(Errc::InvalidArgument, "solve: shape mismatch");
    LuDecomposition lu(a);
    const std::size_t n = a.rows();
    std::vector<long double> rhs(b.begin(), b.end());
    auto x = lu.solve_extended(rhs);
    std::vector<long double> r(n);
    for (std::size_t i = 0; i < n; ++i) {
        long double acc = rhs[i];
        for (std::size_t j = 0; j < n; ++j) acc -= static_cast<long double>(a(i, j)) * x[j];
        r[i] = acc;
    }
    auto dx = lu.solve_extended(r);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(x[i] + dx[i]);
    return out;
}

/// Inverse of a small square matrix (dimension <= 64).
inline DenseMatrix invert_small(const DenseMatrix& a) {
    if (!a.square()) throw Error(Errc::InvalidArgument, "invert: matrix is not square");
    if (a.rows() > 64) throw Error(Errc::InvalidArgument, "invert_small is limited to dimension 64");
    LuDecomposition lu(a);
    const std::size_t n = a.rows();
    DenseMatrix inv(n, n);
    std::vector<long double> e(n, 0.0L);
    for (std::size_t c = 0; c < n; ++c) {
        std::fill(e.begin(), e.end(), 0.0L);
        e[c] = 1.0L;
        auto col = lu.solve_extended(e);
        for (std::size_t r = 0; r < n; ++r) inv(r, c) = static_cast<double>(col[r]);
    }
    return inv;
}

/// Inverse of a symmetric positive definite matrix whose diagonal spans many
/// orders of magnitude: inverts D^-1/2 A D^-1/2 and rescales.
inline DenseMatrix invert_scaled_symmetric(const DenseMatrix& a) {
    const std::size_t n = a.rows();
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(a(i, i) > 0.0)) throw Error(Errc::SingularMatrix, "nonpositive diagonal entry");
        s[i] = 1.0 / std::sqrt(a(i, i));
    }
    DenseMatrix scaled(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scaled(i, j) = a(i, j) * s[i] * s[j];
    auto inv = invert_small(scaled);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) inv(i, j) *= s[i] * s[j];
    return inv;
}

}  // namespace rbopt

#endif  // RBOPT_LINALG_HPP
