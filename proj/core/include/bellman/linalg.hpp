#pragma once

#include <Eigen/Dense>

#include "bellman/errors.hpp"

namespace bellman {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix. Input is symmetrized as (M + M')/2 on construction,
/// which guards against asymmetry drift from repeated filter updates.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& m);

    int dim() const { return static_cast<int>(m_.rows()); }
    const Matrix& mat() const { return m_; }
    double operator()(int i, int j) const { return m_(i, j); }

    static SymMatrix identity(int n);
    static SymMatrix zero(int n);

private:
    Matrix m_;
};

/// Symmetric positive-definite matrix stored together with its lower
/// Cholesky factor. Solves and log-determinants reuse the factor; an explicit
/// inverse is never formed.
class PDMatrix {
public:
    PDMatrix() = default;
    explicit PDMatrix(const SymMatrix& m);  // throws NotPositiveDefinite
    explicit PDMatrix(const Matrix& m);     // symmetrizes, then factors

    int dim() const { return sym_.dim(); }
    const Matrix& mat() const { return sym_.mat(); }
    const SymMatrix& sym() const { return sym_; }
    /// Lower-triangular L with L L' = mat().
    const Matrix& factor() const { return chol_; }

    Vector solve(const Vector& rhs) const;
    Matrix solve(const Matrix& rhs) const;
    /// v' M^{-1} v, evaluated as the squared norm of L^{-1} v.
    double quad_form(const Vector& v) const;
    double logdet() const;

    static PDMatrix identity(int n);

private:
    SymMatrix sym_;
    Matrix chol_;
};

/// Factors a symmetric matrix, failing with the pivot index if any pivot
/// drops below 1e-13 times the largest diagonal entry.
PDMatrix cholesky(const SymMatrix& m);

Matrix solve_pd(const PDMatrix& m, const Matrix& rhs);
Vector solve_pd(const PDMatrix& m, const Vector& rhs);

double logdet_pd(const PDMatrix& m);

/// (A + C'B^{-1}C)^{-1} evaluated as A^{-1} - A^{-1}C'(B + CA^{-1}C')^{-1}CA^{-1},
/// so only the B-sized system is factorized. C must be (dim B) x (dim A).
SymMatrix woodbury_inverse(const PDMatrix& a, const PDMatrix& b, const Matrix& c);

/// (A + C'B^{-1}C)^{-1}C'B^{-1} evaluated as A^{-1}C'(B + CA^{-1}C')^{-1},
/// the gain form of the same lemma pair.
Matrix gain_identity(const PDMatrix& a, const PDMatrix& b, const Matrix& c);

/// Cholesky-like factor for positive *semi*-definite matrices: pivots within
/// tolerance of zero produce a zero column instead of failing. Throws
/// NotPositiveDefinite only for genuinely indefinite input. Returns lower L
/// with L L' = m.
Matrix psd_factor(const SymMatrix& m, double rel_tol = 1e-12);

}  // namespace bellman
