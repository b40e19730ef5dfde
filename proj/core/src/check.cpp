#include "bellman/check.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "bellman/oracle.hpp"
#include "bellman/smoother.hpp"

namespace bellman {

namespace {

Matrix random_matrix(Rng& rng, int rows, int cols) {
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

PDMatrix random_pd(Rng& rng, int n) {
    const Matrix g = random_matrix(rng, n, n);
    return PDMatrix(SymMatrix(g.transpose() * g + Matrix::Identity(n, n)));
}

double rel_err(const Matrix& a, const Matrix& b) {
    const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
    return es.eigenvalues().minCoeff();
}

CheckResult run_one(const std::string& name, const std::function<std::string()>& body) {
    try {
        std::string detail = body();
        return {name, detail.empty(), std::move(detail)};
    } catch (const Error& e) {
        return {name, false, e.what()};
    }
}

std::string check_gain_lemma(Rng& rng) {
    for (int rep = 0; rep < 200; ++rep) {
        const int da = 1 + static_cast<int>(rng.next_u64() % 6);
        const int db = 1 + static_cast<int>(rng.next_u64() % 6);
        const PDMatrix a = random_pd(rng, da);
        const PDMatrix b = random_pd(rng, db);
        const Matrix c = random_matrix(rng, db, da);
        const Matrix lhs = (a.mat() + c.transpose() * b.solve(c)).inverse() *
                           c.transpose() * b.solve(Matrix(Matrix::Identity(db, db)));
        const Matrix rhs = gain_identity(a, b, c);
        if (rel_err(lhs, rhs) > 1e-8) {
            std::ostringstream os;
            os << "gain identity mismatch " << rel_err(lhs, rhs) << " at instance " << rep;
            return os.str();
        }
    }
    return {};
}

std::string check_woodbury_lemma(Rng& rng) {
    for (int rep = 0; rep < 200; ++rep) {
        const int da = 1 + static_cast<int>(rng.next_u64() % 6);
        const int db = 1 + static_cast<int>(rng.next_u64() % 6);
        const PDMatrix a = random_pd(rng, da);
        const PDMatrix b = random_pd(rng, db);
        const Matrix c = random_matrix(rng, db, da);
        const Matrix direct = (a.mat() + c.transpose() * b.solve(c)).inverse();
        const Matrix via_lemma = woodbury_inverse(a, b, c).mat();
        if (rel_err(direct, via_lemma) > 1e-8) {
            std::ostringstream os;
            os << "woodbury mismatch " << rel_err(direct, via_lemma) << " at instance " << rep;
            return os.str();
        }
    }
    return {};
}

// Assembles the inverse of [[A, C'], [C, -B]] from both block formulations
// and multiplies back against the block matrix.
std::string check_block_inverse(Rng& rng) {
    for (int rep = 0; rep < 200; ++rep) {
        const int da = 1 + static_cast<int>(rng.next_u64() % 6);
        const int db = 1 + static_cast<int>(rng.next_u64() % 6);
        const PDMatrix a = random_pd(rng, da);
        const PDMatrix b = random_pd(rng, db);
        const Matrix c = random_matrix(rng, db, da);

        Matrix m(da + db, da + db);
        m.topLeftCorner(da, da) = a.mat();
        m.topRightCorner(da, db) = c.transpose();
        m.bottomLeftCorner(db, da) = c;
        m.bottomRightCorner(db, db) = -b.mat();

        const Matrix a_small = (a.mat() + c.transpose() * b.solve(c)).inverse();
        const Matrix b_small = (b.mat() + c * a.solve(Matrix(c.transpose()))).inverse();
        const Matrix a_inv = a.solve(Matrix(Matrix::Identity(da, da)));

        Matrix inv1(da + db, da + db);
        inv1.topLeftCorner(da, da) = a_small;
        inv1.topRightCorner(da, db) = a_small * c.transpose() * b.solve(Matrix(Matrix::Identity(db, db)));
        inv1.bottomLeftCorner(db, da) = b_small * c * a_inv;
        inv1.bottomRightCorner(db, db) = -b_small;

        Matrix inv2(da + db, da + db);
        inv2.topLeftCorner(da, da) = a_inv - a_inv * c.transpose() * b_small * c * a_inv;
        inv2.topRightCorner(da, db) = a_inv * c.transpose() * b_small;
        inv2.bottomLeftCorner(db, da) = b_small * c * a_inv;
        inv2.bottomRightCorner(db, db) = -b_small;

        const Matrix id = Matrix::Identity(da + db, da + db);
        if (rel_err(inv1 * m, id) > 1e-8 || rel_err(inv2 * m, id) > 1e-8)
            return "block inverse failed to reproduce the identity at instance " +
                   std::to_string(rep);
    }
    return {};
}

std::string check_cholesky_roundtrip(Rng& rng) {
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 1 + static_cast<int>(rng.next_u64() % 6);
        const PDMatrix p = random_pd(rng, n);
        const Matrix rebuilt = p.factor() * p.factor().transpose();
        if (rel_err(rebuilt, p.mat()) > 1e-10)
            return "factor round-trip error " + std::to_string(rel_err(rebuilt, p.mat()));
        const PDMatrix again = cholesky(SymMatrix(rebuilt));
        if (rel_err(again.mat(), p.mat()) > 1e-10)
            return "refactored matrix drifted at instance " + std::to_string(rep);
    }
    return {};
}

// Deterministic in-support observation probes around the mean response.
std::vector<Vector> observation_probes(const ModelSpec& spec, const ObservationModel& model,
                                       const Vector& x) {
    std::vector<Vector> probes;
    const Vector center = spec.obs_intercept + spec.obs_loading * x;
    switch (spec.kind) {
        case ObservationKind::Gaussian: {
            const Vector sd = spec.obs_noise.diagonal().cwiseSqrt();
            for (int k = -3; k <= 3; k += 2) probes.push_back(center + k * sd);
            break;
        }
        case ObservationKind::NonconcaveStub: {
            for (int k = -3; k <= 3; ++k)
                probes.push_back(center + Vector::Constant(center.size(), double(k)));
            break;
        }
        case ObservationKind::Poisson: {
            for (int k = -2; k <= 2; ++k) {
                Vector y(center.size());
                for (int i = 0; i < y.size(); ++i) {
                    const double lambda = std::exp(center(i));
                    y(i) = std::max(0.0, std::round(lambda + k * std::sqrt(lambda)));
                }
                probes.push_back(y);
            }
            break;
        }
        case ObservationKind::Bernoulli: {
            probes.push_back(Vector::Zero(model.obs_dim()));
            probes.push_back(Vector::Ones(model.obs_dim()));
            break;
        }
    }
    return probes;
}

std::vector<Vector> state_probes(const RunConfig& cfg) {
    const Vector sd = cfg.filter.P0.mat().diagonal().cwiseSqrt();
    std::vector<Vector> probes;
    for (int s = -2; s <= 2; ++s) probes.push_back(cfg.filter.x0 + s * sd);
    return probes;
}

std::string check_score_fd(const RunConfig& cfg, const ObservationModel& model) {
    for (const Vector& x : state_probes(cfg)) {
        for (const Vector& y : observation_probes(cfg.model, model, x)) {
            const Vector g = model.score(y, x);
            const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
            for (int i = 0; i < x.size(); ++i) {
                const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
                Vector xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                const double fd = (model.log_density(y, xp) - model.log_density(y, xm)) / (2 * h);
                if (std::abs(fd - g(i)) > 1e-6 * scale) {
                    std::ostringstream os;
                    os << "score[" << i << "] = " << g(i) << " vs finite difference " << fd;
                    return os.str();
                }
            }
        }
    }
    return {};
}

std::string check_neg_hessian_fd(const RunConfig& cfg, const ObservationModel& model) {
    for (const Vector& x : state_probes(cfg)) {
        for (const Vector& y : observation_probes(cfg.model, model, x)) {
            const Matrix nh = model.neg_hessian(y, x).mat();
            const double scale = std::max(1.0, nh.cwiseAbs().maxCoeff());
            for (int i = 0; i < x.size(); ++i) {
                const double h = 1e-5 * std::max(1.0, std::abs(x(i)));
                Vector xp = x, xm = x;
                xp(i) += h;
                xm(i) -= h;
                const Vector fd = (model.score(y, xp) - model.score(y, xm)) / (2 * h);
                for (int j = 0; j < x.size(); ++j) {
                    if (std::abs(-fd(j) - nh(j, i)) > 1e-5 * scale) {
                        std::ostringstream os;
                        os << "neg_hessian(" << j << "," << i << ") = " << nh(j, i)
                           << " vs finite difference " << -fd(j);
                        return os.str();
                    }
                }
            }
        }
    }
    return {};
}

SymMatrix configured_information(const RunConfig& cfg, const ObservationModel& model,
                                 const Vector& y, const Vector& x) {
    switch (cfg.filter.info_mode) {
        case InformationMode::Fisher: return model.fisher(x);
        case InformationMode::Realized: return model.neg_hessian(y, x);
        case InformationMode::Weighted: {
            const double w = cfg.filter.fisher_weight;
            return SymMatrix(w * model.fisher(x).mat() +
                             (1.0 - w) * model.neg_hessian(y, x).mat());
        }
    }
    throw InvalidModel("unknown information mode");
}

// The PD check: the configured information matrix must admit a PSD
// factorization at every probe. A weighted mode leaning on a non-concave
// realized Hessian fails here.
std::string check_information_pd(const RunConfig& cfg, const ObservationModel& model) {
    for (const Vector& x : state_probes(cfg)) {
        for (const Vector& y : observation_probes(cfg.model, model, x)) {
            const SymMatrix J = configured_information(cfg, model, y, x);
            try {
                psd_factor(J);
            } catch (const NotPositiveDefinite& e) {
                std::ostringstream os;
                os << "information matrix indefinite at probe (pivot " << e.pivot_index
                   << " = " << e.pivot_value << ")";
                return os.str();
            }
        }
    }
    return {};
}

std::string check_filter_invariants(const RunConfig& cfg, const StateTransition& trans,
                                    const ObservationModel& model, std::uint64_t seed) {
    const oracle::SimulationRun run = oracle::simulate(trans, model, 50, cfg.filter.x0, seed);
    const FilterOutput out = run_filter(run.observations, trans, model, cfg.filter);
    for (const FilterStep& step : out.steps) {
        const double scale = std::max(1.0, step.P_pred.mat().cwiseAbs().maxCoeff());
        if (min_eigenvalue(step.P_pred.mat() - step.P_filt.mat()) < -1e-10 * scale)
            return "P_pred - P_filt not PSD at t = " + std::to_string(step.t);
        const Vector diff = step.x_filt - step.x_pred;
        const double penalty = 0.5 * (step.P_pred.logdet() - step.P_filt.logdet()) +
                               0.5 * step.P_pred.quad_form(diff);
        if (penalty < -1e-10)
            return "negative penalty " + std::to_string(penalty) + " at t = " +
                   std::to_string(step.t);
    }
    return {};
}

std::string check_kalman_equivalence(const RunConfig& cfg, const StateTransition& trans,
                                     const GaussianObservation& model, std::uint64_t seed) {
    const oracle::SimulationRun run = oracle::simulate(trans, model, 30, cfg.filter.x0, seed);
    const FilterOutput fast = run_filter(run.observations, trans, model, cfg.filter);
    const FilterOutput newton =
        run_filter(run.observations, trans, model, cfg.filter, UpdatePath::ForceOptimizer);
    for (std::size_t i = 0; i < fast.steps.size(); ++i) {
        const FilterStep& a = fast.steps[i];
        const FilterStep& b = newton.steps[i];
        const double err = std::max({rel_err(a.x_filt, b.x_filt), rel_err(a.x_pred, b.x_pred),
                                     rel_err(a.P_filt.mat(), b.P_filt.mat()),
                                     rel_err(a.P_pred.mat(), b.P_pred.mat())});
        if (err > 1e-8)
            return "paths diverge by " + std::to_string(err) + " at t = " + std::to_string(a.t);
    }
    return {};
}

std::string check_likelihood_vs_kalman(const RunConfig& cfg, const StateTransition& trans,
                                       const GaussianObservation& model, std::uint64_t seed) {
    const oracle::SimulationRun run = oracle::simulate(trans, model, 40, cfg.filter.x0, seed);
    const double filter_obj = run_filter(run.observations, trans, model, cfg.filter).objective;
    const double exact = oracle::exact_kalman_loglik(run.observations, trans, model, cfg.filter);
    if (std::abs(filter_obj - exact) > 1e-8 * std::max(1.0, std::abs(exact))) {
        std::ostringstream os;
        os << "objective " << filter_obj << " vs exact likelihood " << exact;
        return os.str();
    }
    return {};
}

std::string check_smoother_fixed_point(const RunConfig& cfg, const StateTransition& trans,
                                       Rng& rng) {
    const int d = trans.state_dim();
    for (int rep = 0; rep < 20; ++rep) {
        FilterStep filt;
        filt.t = 1;
        filt.x_filt = random_matrix(rng, d, 1);
        filt.P_filt = random_pd(rng, d);
        const Vector x_pred_next = trans.c + trans.T * filt.x_filt;
        const PDMatrix P_pred_next(SymMatrix(trans.T * filt.P_filt.mat() * trans.T.transpose() +
                                             trans.R * trans.Q.mat() * trans.R.transpose()));
        const SmootherStep next{2, x_pred_next, P_pred_next.sym()};
        const SmootherStep out = rts_step(filt, x_pred_next, P_pred_next, next, trans);
        if (rel_err(out.x_smooth, filt.x_filt) > 1e-9 ||
            rel_err(out.P_smooth.mat(), filt.P_filt.mat()) > 1e-9)
            return "fixed point violated at instance " + std::to_string(rep);
    }
    return {};
}

}  // namespace

std::vector<CheckResult> run_checks(const RunConfig& cfg) {
    const std::uint64_t seed = cfg.simulation ? cfg.simulation->seed : 1u;
    const StateTransition trans = build_transition(cfg.model);
    const auto model = build_observation(cfg.model);
    const auto* gaussian = dynamic_cast<const GaussianObservation*>(model.get());

    std::vector<CheckResult> results;
    Rng rng(20240811u);

    results.push_back(run_one("matrix-lemma-gain", [&] { return check_gain_lemma(rng); }));
    results.push_back(run_one("matrix-lemma-woodbury", [&] { return check_woodbury_lemma(rng); }));
    results.push_back(run_one("block-inverse", [&] { return check_block_inverse(rng); }));
    results.push_back(run_one("cholesky-roundtrip", [&] { return check_cholesky_roundtrip(rng); }));
    results.push_back(run_one("score-gradient", [&] { return check_score_fd(cfg, *model); }));
    results.push_back(
        run_one("neg-hessian-gradient", [&] { return check_neg_hessian_fd(cfg, *model); }));
    results.push_back(
        run_one("information-pd", [&] { return check_information_pd(cfg, *model); }));
    results.push_back(run_one("filter-invariants",
                              [&] { return check_filter_invariants(cfg, trans, *model, seed); }));
    if (gaussian != nullptr) {
        results.push_back(run_one("kalman-equivalence", [&] {
            return check_kalman_equivalence(cfg, trans, *gaussian, seed);
        }));
        results.push_back(run_one("likelihood-vs-kalman", [&] {
            return check_likelihood_vs_kalman(cfg, trans, *gaussian, seed);
        }));
    }
    results.push_back(
        run_one("smoother-fixed-point", [&] { return check_smoother_fixed_point(cfg, trans, rng); }));
    return results;
}

}  // namespace bellman
