#include "bellman/oracle.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

namespace bellman::oracle {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

Vector draw_normals(Rng& rng, int n) {
    Vector z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    return z;
}

}  // namespace

SimulationRun simulate(const StateTransition& trans, const ObservationModel& model, int n,
                       const Vector& x0_true, std::uint64_t seed) {
    if (x0_true.size() != trans.state_dim())
        throw DimensionMismatch("simulate: x0_true dimension mismatch");

    Rng rng(seed);
    const Matrix noise_factor = psd_factor(trans.Q);

    SimulationRun run;
    run.seed = seed;
    run.states.reserve(n);
    run.observations.reserve(n);
    run.eta_draws.reserve(n);

    Vector x = x0_true;
    for (int t = 0; t < n; ++t) {
        const Vector eta = noise_factor * draw_normals(rng, trans.noise_dim());
        x = trans.c + trans.T * x + trans.R * eta;
        run.eta_draws.push_back(eta);
        run.states.push_back(x);
        run.observations.push_back(model.sample(rng, x));
    }
    return run;
}

double exact_kalman_loglik(const std::vector<Vector>& data, const StateTransition& trans,
                           const GaussianObservation& model, const FilterConfig& cfg) {
    const int d = trans.state_dim();
    const int k = model.obs_dim();
    if (cfg.x0.size() != d || cfg.P0.dim() != d)
        throw DimensionMismatch("exact_kalman_loglik: x0/P0 dimension mismatch");

    const Matrix& Z = model.loading();
    const Matrix& H = model.noise().mat();
    Vector x = cfg.x0;
    Matrix P = cfg.P0.mat();

    double ll = 0.0;
    for (const Vector& y : data) {
        if (y.size() != k) throw DimensionMismatch("exact_kalman_loglik: observation length mismatch");
        const Vector x_pred = trans.c + trans.T * x;
        Matrix P_pred = trans.T * P * trans.T.transpose() +
                        trans.R * trans.Q.mat() * trans.R.transpose();
        P_pred = 0.5 * (P_pred + P_pred.transpose());

        const Vector innovation = y - model.intercept() - Z * x_pred;
        Matrix F = Z * P_pred * Z.transpose() + H;
        F = 0.5 * (F + F.transpose());
        Eigen::LLT<Matrix> llt(F);
        if (llt.info() != Eigen::Success)
            throw NotPositiveDefinite(0, std::numeric_limits<double>::quiet_NaN());

        double logdet_f = 0.0;
        for (int i = 0; i < k; ++i) logdet_f += std::log(llt.matrixL()(i, i));
        logdet_f *= 2.0;
        ll += -0.5 * k * kLog2Pi - 0.5 * logdet_f -
              0.5 * innovation.dot(llt.solve(innovation));

        const Matrix K = llt.solve(Z * P_pred).transpose();  // P Z' F^{-1}
        x = x_pred + K * innovation;
        P = P_pred - K * Z * P_pred;
        P = 0.5 * (P + P.transpose());
    }
    return ll;
}

namespace {

double grid_objective(const ObservationModel& model, const Vector& y, const Vector& x,
                      const Vector& x_pred, const PDMatrix& P_pred) {
    const Vector diff = x - x_pred;
    return model.log_density(y, x) - 0.5 * P_pred.quad_form(diff);
}

// Scans a uniform grid with the given number of points per axis; returns the
// flat index of the best point.
struct GridScan {
    Vector best_x;
    double best_value;
    bool best_on_boundary;
};

GridScan scan_grid(const ObservationModel& model, const Vector& y, const Vector& x_pred,
                   const PDMatrix& P_pred, const Vector& lo, const Vector& hi,
                   const std::vector<int>& points) {
    const int dim = static_cast<int>(lo.size());
    GridScan scan{Vector(dim), -std::numeric_limits<double>::infinity(), false};
    std::vector<int> idx(dim, 0);
    Vector x(dim);
    while (true) {
        bool boundary = false;
        for (int a = 0; a < dim; ++a) {
            x(a) = points[a] == 1
                       ? lo(a)
                       : lo(a) + (hi(a) - lo(a)) * idx[a] / static_cast<double>(points[a] - 1);
            boundary = boundary || idx[a] == 0 || idx[a] == points[a] - 1;
        }
        const double value = grid_objective(model, y, x, x_pred, P_pred);
        if (value > scan.best_value) {
            scan.best_value = value;
            scan.best_x = x;
            scan.best_on_boundary = boundary;
        }
        int a = 0;
        while (a < dim && ++idx[a] == points[a]) idx[a++] = 0;
        if (a == dim) break;
    }
    return scan;
}

}  // namespace

Vector grid_mode_search(const Vector& y, const Vector& x_pred, const PDMatrix& P_pred,
                        const ObservationModel& model, const GridBounds& bounds,
                        double resolution) {
    const int dim = static_cast<int>(x_pred.size());
    if (dim < 1 || dim > 2)
        throw DimensionMismatch("grid_mode_search supports state dimension 1 or 2");
    if (bounds.lo.size() != dim || bounds.hi.size() != dim)
        throw DimensionMismatch("grid_mode_search: bounds dimension mismatch");

    const int coarse_points = dim == 1 ? 2001 : 301;
    std::vector<int> points(dim, coarse_points);
    GridScan coarse = scan_grid(model, y, x_pred, P_pred, bounds.lo, bounds.hi, points);
    if (coarse.best_on_boundary)
        throw ModeAtBoundary("grid_mode_search: coarse maximum on the boundary; widen the bounds");

    // Refinement window of +/- one coarse cell around the incumbent.
    Vector lo(dim), hi(dim);
    std::vector<int> fine_points(dim);
    for (int a = 0; a < dim; ++a) {
        const double cell = (bounds.hi(a) - bounds.lo(a)) / (coarse_points - 1);
        lo(a) = coarse.best_x(a) - cell;
        hi(a) = coarse.best_x(a) + cell;
        fine_points[a] = std::max(3, static_cast<int>(std::ceil((hi(a) - lo(a)) / resolution)) + 1);
    }
    GridScan fine = scan_grid(model, y, x_pred, P_pred, lo, hi, fine_points);
    return fine.best_x;
}

std::vector<SmoothedMarginal> exact_joint_smoother(const std::vector<Vector>& data,
                                                   const StateTransition& trans,
                                                   const GaussianObservation& model,
                                                   const FilterConfig& cfg) {
    const int n = static_cast<int>(data.size());
    const int d = trans.state_dim();
    const int k = model.obs_dim();
    if (n == 0) return {};
    if (cfg.x0.size() != d || cfg.P0.dim() != d)
        throw DimensionMismatch("exact_joint_smoother: x0/P0 dimension mismatch");

    // Joint moments of X = (x_1, ..., x_n) with x_0 ~ N(x0, P0).
    Vector mean_x(n * d);
    Matrix cov_x = Matrix::Zero(n * d, n * d);
    const Matrix noise_cov = trans.R * trans.Q.mat() * trans.R.transpose();

    Vector m = cfg.x0;
    Matrix S = cfg.P0.mat();  // Cov(x_t, x_t) running value
    std::vector<Matrix> diag(n);
    for (int t = 0; t < n; ++t) {
        m = trans.c + trans.T * m;
        S = trans.T * S * trans.T.transpose() + noise_cov;
        S = 0.5 * (S + S.transpose());
        mean_x.segment(t * d, d) = m;
        diag[t] = S;
        cov_x.block(t * d, t * d, d, d) = S;
        Matrix cross = S;  // Cov(x_s, x_t) for s > t via repeated left-multiplication by T
        for (int s = t + 1; s < n; ++s) {
            cross = trans.T * cross;
            cov_x.block(s * d, t * d, d, d) = cross;
            cov_x.block(t * d, s * d, d, d) = cross.transpose();
        }
    }

    // Stack observations: Y = d + (I (x) Z) X + noise.
    const Matrix& Z = model.loading();
    Matrix loading = Matrix::Zero(n * k, n * d);
    Vector mean_y(n * k);
    Vector y_stack(n * k);
    for (int t = 0; t < n; ++t) {
        loading.block(t * k, t * d, k, d) = Z;
        mean_y.segment(t * k, k) = model.intercept() + Z * mean_x.segment(t * d, d);
        y_stack.segment(t * k, k) = data[t];
    }
    Matrix cov_xy = cov_x * loading.transpose();
    Matrix cov_yy = loading * cov_xy;
    for (int t = 0; t < n; ++t)
        cov_yy.block(t * k, t * k, k, k) += model.noise().mat();
    cov_yy = 0.5 * (cov_yy + cov_yy.transpose());

    Eigen::LLT<Matrix> llt(cov_yy);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefinite(0, std::numeric_limits<double>::quiet_NaN());

    const Vector cond_mean = mean_x + cov_xy * llt.solve(y_stack - mean_y);
    const Matrix cond_cov = cov_x - cov_xy * llt.solve(cov_xy.transpose());

    std::vector<SmoothedMarginal> out(n);
    for (int t = 0; t < n; ++t) {
        out[t].mean = cond_mean.segment(t * d, d);
        out[t].cov = SymMatrix(cond_cov.block(t * d, t * d, d, d));
    }
    return out;
}

std::vector<ParticleSummary> bootstrap_particle_filter(const std::vector<Vector>& data,
                                                       const StateTransition& trans,
                                                       const ObservationModel& model,
                                                       int n_particles, std::uint64_t seed,
                                                       const FilterConfig& cfg) {
    const int d = trans.state_dim();
    if (n_particles < 100) throw InvalidModel("bootstrap_particle_filter: need at least 100 particles");
    if (cfg.x0.size() != d || cfg.P0.dim() != d)
        throw DimensionMismatch("bootstrap_particle_filter: x0/P0 dimension mismatch");

    Rng rng(seed);
    const Matrix noise_factor = psd_factor(trans.Q);

    std::vector<Vector> particles(n_particles);
    for (int i = 0; i < n_particles; ++i)
        particles[i] = cfg.x0 + cfg.P0.factor() * draw_normals(rng, d);

    std::vector<ParticleSummary> out;
    out.reserve(data.size());
    std::vector<double> weights(n_particles);
    std::vector<Vector> resampled(n_particles);

    for (std::size_t step = 0; step < data.size(); ++step) {
        const int t = static_cast<int>(step) + 1;
        // Propagate.
        for (auto& p : particles)
            p = trans.c + trans.T * p + trans.R * (noise_factor * draw_normals(rng, trans.noise_dim()));

        // Weight by the observation density, shifted by the max log weight.
        double max_lw = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n_particles; ++i) {
            weights[i] = model.log_density(data[step], particles[i]);
            max_lw = std::max(max_lw, weights[i]);
        }
        if (!std::isfinite(max_lw)) throw WeightCollapse(t);
        double total = 0.0;
        for (auto& w : weights) {
            w = std::exp(w - max_lw);
            total += w;
        }

        ParticleSummary summary{Vector::Zero(d), Vector::Zero(d)};
        for (int i = 0; i < n_particles; ++i) summary.mean += (weights[i] / total) * particles[i];
        for (int i = 0; i < n_particles; ++i) {
            const Vector dev = particles[i] - summary.mean;
            summary.var += (weights[i] / total) * dev.cwiseProduct(dev);
        }
        out.push_back(std::move(summary));

        // Systematic resampling.
        const double offset = rng.uniform();
        double cumulative = weights[0];
        int j = 0;
        for (int i = 0; i < n_particles; ++i) {
            const double position = (i + offset) / n_particles * total;
            while (cumulative < position && j + 1 < n_particles) cumulative += weights[++j];
            resampled[i] = particles[j];
        }
        particles.swap(resampled);
    }
    return out;
}

}  // namespace bellman::oracle
