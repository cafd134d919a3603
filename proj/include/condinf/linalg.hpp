#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "condinf/errors.hpp"

// Dense symmetric linear algebra for small systems: Cholesky factors,
// triangular solves, quadratic forms. Nothing general-purpose.

namespace condinf {

using Vector = std::vector<double>;

class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    static Matrix from_rows(const std::vector<Vector>& rows) {
        if (rows.empty()) return Matrix();
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != m.cols_)
                throw DimensionMismatch("from_rows: ragged row lengths");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    // Raw row access for tight loops.
    double* row_ptr(std::size_t i) { return data_.data() + i * cols_; }
    const double* row_ptr(std::size_t i) const { return data_.data() + i * cols_; }

    Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    double max_abs() const {
        double m = 0.0;
        for (double v : data_) m = std::max(m, std::abs(v));
        return m;
    }

    bool operator==(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionMismatch("matrix product: inner dimensions differ");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    return c;
}

inline Vector operator*(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw DimensionMismatch("matrix-vector product: dimensions differ");
    Vector y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double s = 0.0;
        const double* row = a.row_ptr(i);
        for (std::size_t j = 0; j < a.cols(); ++j) s += row[j] * x[j];
        y[i] = s;
    }
    return y;
}

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatch("dot: lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Symmetric matrix validated on construction; positive semidefiniteness is
// checked where it is actually needed, by attempting the Cholesky factorization.
class CovarianceMatrix {
public:
    CovarianceMatrix() = default;

    explicit CovarianceMatrix(Matrix m) : m_(std::move(m)) {
        if (m_.rows() != m_.cols()) throw DimensionMismatch("covariance matrix must be square");
        const double scale = m_.max_abs();
        const double tol = 1e-12 * std::max(scale, 1e-300);
        for (std::size_t i = 0; i < m_.rows(); ++i)
            for (std::size_t j = i + 1; j < m_.cols(); ++j)
                if (std::abs(m_(i, j) - m_(j, i)) > tol)
                    throw DomainError("covariance matrix not symmetric at (" + std::to_string(i) +
                                      "," + std::to_string(j) + ")");
        // Store the exactly symmetrized version so downstream algebra sees
        // symmetry to the last bit.
        for (std::size_t i = 0; i < m_.rows(); ++i)
            for (std::size_t j = i + 1; j < m_.cols(); ++j) {
                const double avg = 0.5 * (m_(i, j) + m_(j, i));
                m_(i, j) = avg;
                m_(j, i) = avg;
            }
    }

    std::size_t dim() const { return m_.rows(); }
    const Matrix& entries() const { return m_; }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

private:
    Matrix m_;
};

namespace detail {

inline double max_diagonal(const Matrix& m) {
    double d = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) d = std::max(d, m(i, i));
    return d;
}

// Lower Cholesky with a tolerance for semidefinite pivots. A pivot more
// negative than -psd_tol * max_diag means the matrix is not PSD; a zero pivot
// is accepted only when the rest of its column is (numerically) zero too.
inline Matrix cholesky_impl(const Matrix& sigma, bool require_nonsingular) {
    const std::size_t n = sigma.rows();
    const double max_diag = std::max(max_diagonal(sigma), 0.0);
    const double psd_tol = 1e-10 * std::max(max_diag, 1e-300);
    const double pivot_floor = 1e-10 * max_diag;  // on the L_jj scale

    Matrix L(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double d = sigma(j, j);
        for (std::size_t k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
        if (d < -psd_tol)
            throw NotPositiveSemiDefinite("pivot " + std::to_string(j) + " is " +
                                          std::to_string(d) + " < 0");
        const double piv = std::sqrt(std::max(d, 0.0));
        if (require_nonsingular && !(piv > pivot_floor))
            throw NotPositiveSemiDefinite("pivot " + std::to_string(j) +
                                          " below nonsingularity floor");
        L(j, j) = piv;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = sigma(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            if (piv > 0.0) {
                L(i, j) = s / piv;
            } else if (std::abs(s) <= 1e-8 * std::max(std::sqrt(max_diag), 1e-150)) {
                L(i, j) = 0.0;
            } else {
                throw NotPositiveSemiDefinite("zero pivot with nonzero column at (" +
                                              std::to_string(i) + "," + std::to_string(j) + ")");
            }
        }
    }
    return L;
}

}  // namespace detail

// L with L L^T = sigma. Throws NotPositiveSemiDefinite.
inline Matrix cholesky(const CovarianceMatrix& sigma) {
    return detail::cholesky_impl(sigma.entries(), false);
}

// As above, but additionally requires every pivot to clear the nonsingularity
// floor (1e-10 times the largest diagonal entry).
inline Matrix cholesky_nonsingular(const CovarianceMatrix& sigma) {
    return detail::cholesky_impl(sigma.entries(), true);
}

// Solve L y = b (L lower triangular).
inline Vector forward_solve(const Matrix& L, const Vector& b) {
    if (L.rows() != b.size()) throw DimensionMismatch("forward_solve: dimension mismatch");
    Vector y(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        double s = b[i];
        for (std::size_t k = 0; k < i; ++k) s -= L(i, k) * y[k];
        y[i] = s / L(i, i);
    }
    return y;
}

// Solve L^T x = y.
inline Vector backward_solve_transposed(const Matrix& L, const Vector& y) {
    if (L.rows() != y.size()) throw DimensionMismatch("backward_solve: dimension mismatch");
    const std::size_t n = y.size();
    Vector x(n);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= L(k, ii) * x[k];
        x[ii] = s / L(ii, ii);
    }
    return x;
}

// x with sigma x = b, via the (nonsingular) Cholesky factor.
inline Vector solve_spd(const Matrix& chol_lower, const Vector& b) {
    return backward_solve_transposed(chol_lower, forward_solve(chol_lower, b));
}

// v^T sigma^{-1} v via triangular solve: || L^{-1} v ||^2.
inline double quad_form_inv(const Matrix& chol_lower, const Vector& v) {
    Vector y = forward_solve(chol_lower, v);
    double s = 0.0;
    for (double t : y) s += t * t;
    return s;
}

// v^T A v for symmetric A.
inline double quad_form(const Matrix& a, const Vector& v) {
    if (a.rows() != v.size() || a.cols() != v.size())
        throw DimensionMismatch("quad_form: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double* row = a.row_ptr(i);
        double r = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) r += row[j] * v[j];
        s += r * v[i];
    }
    return s;
}

// Force exact symmetry by averaging opposite off-diagonal entries.
inline Matrix symmetrized(const Matrix& m) {
    Matrix out = m;
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = i + 1; j < out.cols(); ++j) {
            const double v = 0.5 * (out(i, j) + out(j, i));
            out(i, j) = v;
            out(j, i) = v;
        }
    return out;
}

// Empirical covariance of the columns of an n x k matrix of mean-zero
// contributions: (1/n) X^T X.
inline CovarianceMatrix column_second_moment(const Matrix& x) {
    const std::size_t n = x.rows();
    const std::size_t k = x.cols();
    Matrix m(k, k);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.row_ptr(i);
        for (std::size_t a = 0; a < k; ++a) {
            const double ra = row[a];
            if (ra == 0.0) continue;
            for (std::size_t b = a; b < k; ++b) m(a, b) += ra * row[b];
        }
    }
    const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = a; b < k; ++b) {
            m(a, b) *= inv_n;
            m(b, a) = m(a, b);
        }
    return CovarianceMatrix(m);
}

}  // namespace condinf
