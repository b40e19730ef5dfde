#include "bellman/linalg.hpp"

#include <cmath>

namespace bellman {

namespace {

constexpr double kPivotRelTol = 1e-13;

// Plain left-looking Cholesky. Kept by hand rather than delegated so the
// failure contract (failing pivot index and value) is exact.
Matrix cholesky_kernel(const Matrix& a, double pivot_floor) {
    const int n = static_cast<int>(a.rows());
    Matrix L = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double pivot = a(j, j);
        for (int k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
        if (!(pivot > pivot_floor)) throw NotPositiveDefinite(j, pivot);
        const double ljj = std::sqrt(pivot);
        L(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / ljj;
        }
    }
    return L;
}

double max_diagonal(const Matrix& a) {
    double m = 0.0;
    for (int i = 0; i < a.rows(); ++i) m = std::max(m, a(i, i));
    return m;
}

void require_square(const Matrix& m) {
    if (m.rows() != m.cols())
        throw DimensionMismatch("expected square matrix, got " + std::to_string(m.rows()) +
                                "x" + std::to_string(m.cols()));
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
    require_square(m);
    m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int n) { return SymMatrix(Matrix::Identity(n, n)); }
SymMatrix SymMatrix::zero(int n) { return SymMatrix(Matrix::Zero(n, n)); }

PDMatrix::PDMatrix(const SymMatrix& m) : sym_(m) {
    chol_ = cholesky_kernel(sym_.mat(), kPivotRelTol * max_diagonal(sym_.mat()));
}

PDMatrix::PDMatrix(const Matrix& m) : PDMatrix(SymMatrix(m)) {}

Vector PDMatrix::solve(const Vector& rhs) const {
    if (rhs.size() != dim())
        throw DimensionMismatch("solve: rhs length " + std::to_string(rhs.size()) +
                                " vs dimension " + std::to_string(dim()));
    Vector w = chol_.triangularView<Eigen::Lower>().solve(rhs);
    return chol_.transpose().triangularView<Eigen::Upper>().solve(w);
}

Matrix PDMatrix::solve(const Matrix& rhs) const {
    if (rhs.rows() != dim())
        throw DimensionMismatch("solve: rhs has " + std::to_string(rhs.rows()) +
                                " rows vs dimension " + std::to_string(dim()));
    Matrix w = chol_.triangularView<Eigen::Lower>().solve(rhs);
    return chol_.transpose().triangularView<Eigen::Upper>().solve(w);
}

double PDMatrix::quad_form(const Vector& v) const {
    if (v.size() != dim())
        throw DimensionMismatch("quad_form: vector length " + std::to_string(v.size()) +
                                " vs dimension " + std::to_string(dim()));
    Vector w = chol_.triangularView<Eigen::Lower>().solve(v);
    return w.squaredNorm();
}

double PDMatrix::logdet() const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i) s += std::log(chol_(i, i));
    return 2.0 * s;
}

PDMatrix PDMatrix::identity(int n) { return PDMatrix(SymMatrix::identity(n)); }

PDMatrix cholesky(const SymMatrix& m) { return PDMatrix(m); }

Matrix solve_pd(const PDMatrix& m, const Matrix& rhs) { return m.solve(rhs); }
Vector solve_pd(const PDMatrix& m, const Vector& rhs) { return m.solve(rhs); }

double logdet_pd(const PDMatrix& m) { return m.logdet(); }

namespace {

void require_lemma_shapes(const PDMatrix& a, const PDMatrix& b, const Matrix& c) {
    if (c.rows() != b.dim() || c.cols() != a.dim())
        throw DimensionMismatch("lemma: C is " + std::to_string(c.rows()) + "x" +
                                std::to_string(c.cols()) + ", expected " +
                                std::to_string(b.dim()) + "x" + std::to_string(a.dim()));
}

}  // namespace

SymMatrix woodbury_inverse(const PDMatrix& a, const PDMatrix& b, const Matrix& c) {
    require_lemma_shapes(a, b, c);
    const Matrix x = a.solve(Matrix(c.transpose()));  // A^{-1} C'
    PDMatrix s(SymMatrix(b.mat() + c * x));           // B + C A^{-1} C'
    const Matrix y = s.solve(Matrix(x.transpose()));  // S^{-1} C A^{-1}
    const Matrix a_inv = a.solve(Matrix(Matrix::Identity(a.dim(), a.dim())));
    return SymMatrix(a_inv - x * y);
}

Matrix gain_identity(const PDMatrix& a, const PDMatrix& b, const Matrix& c) {
    require_lemma_shapes(a, b, c);
    const Matrix x = a.solve(Matrix(c.transpose()));
    PDMatrix s(SymMatrix(b.mat() + c * x));
    return s.solve(Matrix(x.transpose())).transpose();  // A^{-1} C' S^{-1}
}

Matrix psd_factor(const SymMatrix& m, double rel_tol) {
    const Matrix& a = m.mat();
    const int n = m.dim();
    const double scale = max_diagonal(a);
    const double zero_tol = rel_tol * scale;
    const double neg_tol = std::max(zero_tol, 1e-14 * (1.0 + scale));
    Matrix L = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) {
        double pivot = a(j, j);
        for (int k = 0; k < j; ++k) pivot -= L(j, k) * L(j, k);
        if (pivot <= zero_tol) {
            if (pivot < -neg_tol) throw NotPositiveDefinite(j, pivot);
            continue;  // rank-deficient direction, column stays zero
        }
        const double ljj = std::sqrt(pivot);
        L(j, j) = ljj;
        for (int i = j + 1; i < n; ++i) {
            double s = a(i, j);
            for (int k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
            L(i, j) = s / ljj;
        }
    }
    return L;
}

}  // namespace bellman
