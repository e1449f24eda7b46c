#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace mdpsolve {

/// Thrown when a linear solveis attempted on a factorization that was
/// flagged singular. Callers are expected to catch this and pick a fallback.
class SingularSystemError : public std::runtime_error {
  public:
    explicit SingularSystemError(const std::string& what) : std::runtime_error(what) {}
};

/// Row-major dense matrix. Small value type, no view machinery: the MFPT
/// systems this library solves stay at desk scale (<= ~5000 rows).
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> entries;  // rows*cols, row-major

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), entries(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return entries[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }

    static DenseMatrix identity(std::size_t n) {
        DenseMatrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m.at(i, i) = 1.0;
        return m;
    }
};

/// Combined L\U factors of PA = LU with partial pivoting. L's unit diagonal
/// is implicit. `perm[i]` is the original row index that ended up in row i.
struct LuFactorization {
    std::size_t n = 0;
    std::vector<double> lu;        // n*n, row-major
    std::vector<std::size_t> perm;
    bool singular = false;
    double pivot_tol = 0.0;
};

/// Factor a square matrix with partial pivoting. The factorization is always
/// returned; `singular` is set iff some pivot magnitude falls below
/// `pivot_tol`, in which case elimination of the offending column is skipped
/// and lu_solve will refuse the result.
inline LuFactorization lu_factor(const DenseMatrix& a, double pivot_tol = 1e-12) {
    if (a.rows != a.cols)
        throw std::invalid_argument("lu_factor: matrix must be square, got " +
                                    std::to_string(a.rows) + "x" + std::to_string(a.cols));
    const std::size_t n = a.rows;
    LuFactorization f;
    f.n = n;
    f.lu = a.entries;
    f.perm.resize(n);
    f.pivot_tol = pivot_tol;
    std::iota(f.perm.begin(), f.perm.end(), std::size_t{0});

    double* lu = f.lu.data();
    for (std::size_t k = 0; k < n; ++k) {
        // Partial pivoting: first row with the largest |entry| in column k.
        std::size_t pivot_row = k;
        double pivot_mag = std::abs(lu[k * n + k]);
        for (std::size_t i = k + 1; i < n; ++i) {
            const double mag = std::abs(lu[i * n + k]);
            if (mag > pivot_mag) {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if (pivot_mag < pivot_tol) {
            f.singular = true;
            continue;  // leave the column as is; solve is disallowed anyway
        }
        if (pivot_row != k) {
            std::swap(f.perm[k], f.perm[pivot_row]);
            double* rk = lu + k * n;
            double* rp = lu + pivot_row * n;
            for (std::size_t j = 0; j < n; ++j)
                std::swap(rk[j], rp[j]);
        }
        const double pivot = lu[k * n + k];
        const double* row_k = lu + k * n;
        for (std::size_t i = k + 1; i < n; ++i) {
            double* row_i = lu + i * n;
            const double m = row_i[k] / pivot;
            row_i[k] = m;
            if (m == 0.0)
                continue;
            for (std::size_t j = k + 1; j < n; ++j)
                row_i[j] -= m * row_k[j];
        }
    }
    return f;
}

/// Solve Ax = b given the factorization of A. Throws SingularSystemError if
/// the factorization was flagged singular.
inline std::vector<double> lu_solve(const LuFactorization& f, const std::vector<double>& b) {
    if (f.singular)
        throw SingularSystemError("lu_solve: factorization is singular (pivot below " +
                                  std::to_string(f.pivot_tol) + ")");
    if (b.size() != f.n)
        throw std::invalid_argument("lu_solve: rhs length " + std::to_string(b.size()) +
                                    " does not match system size " + std::to_string(f.n));
    const std::size_t n = f.n;
    const double* lu = f.lu.data();
    std::vector<double> x(n);

    // Forward substitution Ly = Pb (unit diagonal).
    for (std::size_t i = 0; i < n; ++i) {
        double sum = b[f.perm[i]];
        const double* row = lu + i * n;
        for (std::size_t j = 0; j < i; ++j)
            sum -= row[j] * x[j];
        x[i] = sum;
    }
    // Back substitution Ux = y.
    for (std::size_t ii = n; ii-- > 0;) {
        const double* row = lu + ii * n;
        double sum = x[ii];
        for (std::size_t j = ii + 1; j < n; ++j)
            sum -= row[j] * x[j];
        x[ii] = sum / row[ii];
    }
    return x;
}

/// Convenience: factor and solve in one call.
inline std::vector<double> solve_dense(const DenseMatrix& a, const std::vector<double>& b,
                                       double pivot_tol = 1e-12) {
    return lu_solve(lu_factor(a, pivot_tol), b);
}

/// max_i |(Ax - b)_i|, the residual bound used by the solve contract.
inline double residual_inf(const DenseMatrix& a, const std::vector<double>& x,
                           const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows; ++i) {
        double sum = 0.0;
        const double* row = a.entries.data() + i * a.cols;
        for (std::size_t j = 0; j < a.cols; ++j)
            sum += row[j] * x[j];
        worst = std::max(worst, std::abs(sum - b[i]));
    }
    return worst;
}

}  // namespace mdpsolve
