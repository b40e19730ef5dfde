#pragma once

// Shared helpers for the test suites: tolerance-aware comparisons and random
// model generators driven by the project's portable RNG.

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "bellman/filter.hpp"
#include "bellman/model.hpp"
#include "bellman/random.hpp"

namespace test_support {

using bellman::Matrix;
using bellman::Rng;
using bellman::Vector;

inline double rel_err(const Matrix& a, const Matrix& b) {
    const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

inline double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().minCoeff();
}

inline bool is_psd(const Matrix& m, double tol) { return min_eigenvalue(m) >= tol; }

inline Vector random_vector(Rng& rng, int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.normal();
    return v;
}

inline Matrix random_matrix(Rng& rng, int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

inline bellman::PDMatrix random_pd(Rng& rng, int n) {
    const Matrix g = random_matrix(rng, n, n);
    return bellman::PDMatrix(bellman::SymMatrix(g.transpose() * g + Matrix::Identity(n, n)));
}

struct RandomLinearGaussian {
    bellman::StateTransition trans;
    bellman::GaussianObservation obs;
    bellman::FilterConfig cfg;
};

// Random stable linear-Gaussian model: spectral radius of T capped at 0.9,
// PD noise matrices, nonzero loadings.
inline RandomLinearGaussian random_linear_gaussian(Rng& rng, int state_dim, int obs_dim) {
    Matrix T = random_matrix(rng, state_dim, state_dim);
    const double radius = std::abs(T.eigenvalues().cwiseAbs().maxCoeff());
    if (radius > 1e-8) T *= 0.9 / std::max(radius, 0.9);

    const Matrix Q = [&] {
        const Matrix g = random_matrix(rng, state_dim, state_dim);
        return Matrix(0.5 * g.transpose() * g + 0.1 * Matrix::Identity(state_dim, state_dim));
    }();
    const Matrix H = [&] {
        const Matrix g = random_matrix(rng, obs_dim, obs_dim);
        return Matrix(0.5 * g.transpose() * g + 0.1 * Matrix::Identity(obs_dim, obs_dim));
    }();

    bellman::StateTransition trans(random_vector(rng, state_dim) * 0.1, T,
                                   Matrix::Identity(state_dim, state_dim), Q);
    bellman::GaussianObservation obs(random_vector(rng, obs_dim),
                                     random_matrix(rng, obs_dim, state_dim), H);
    bellman::FilterConfig cfg(random_vector(rng, state_dim) * 0.1,
                              bellman::PDMatrix::identity(state_dim));
    return {std::move(trans), std::move(obs), std::move(cfg)};
}

}  // namespace test_support
