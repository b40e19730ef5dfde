// Acceptance suite: nine go/no-go criteria checked at fixed tolerances.
// Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "bellman/estimation.hpp"
#include "bellman/oracle.hpp"
#include "bellman/smoother.hpp"
#include "support.hpp"

using namespace bellman;
using test_support::is_psd;
using test_support::random_linear_gaussian;
using test_support::random_matrix;
using test_support::random_pd;
using test_support::random_vector;
using test_support::rel_err;

namespace {

Vector vec1(double v) { return Vector::Constant(1, v); }
Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }

StateTransition local_level(double q) {
    return {Vector::Zero(1), mat1(1.0), mat1(1.0), mat1(q)};
}

struct Criterion {
    int number;
    std::string name;
    std::function<std::string()> body;  // empty string = pass
};

// --- 1. Kalman reduction ---------------------------------------------------

std::string kalman_reduction() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(1001u);
    for (int seed = 0; seed < 20; ++seed) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 5);
        const int k = 1 + static_cast<int>(rng.next_u64() % 3);
        auto m = random_linear_gaussian(rng, d, k);
        const auto run = oracle::simulate(m.trans, m.obs, 50, m.cfg.x0, 2000u + seed);

        const FilterOutput closed = run_filter(run.observations, m.trans, m.obs, m.cfg);
        const FilterOutput newton =
            run_filter(run.observations, m.trans, m.obs, m.cfg, UpdatePath::ForceOptimizer);
        for (std::size_t t = 0; t < closed.steps.size(); ++t) {
            const FilterStep& a = closed.steps[t];
            const FilterStep& b = newton.steps[t];
            const double err =
                std::max({rel_err(a.x_pred, b.x_pred), rel_err(a.x_filt, b.x_filt),
                          rel_err(a.P_pred.mat(), b.P_pred.mat()),
                          rel_err(a.P_filt.mat(), b.P_filt.mat())});
            if (err > 1e-8) {
                std::ostringstream os;
                os << "model " << seed << " t " << (t + 1) << " relative error " << err;
                return os.str();
            }
        }
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= 5.0) return "runtime " + std::to_string(secs) + "s exceeds 5s";
    return {};
}

// --- 2. Matrix lemmas -------------------------------------------------------

std::string matrix_lemmas() {
    const auto start = std::chrono::steady_clock::now();
    Rng rng(1002u);
    for (int rep = 0; rep < 200; ++rep) {
        const int da = 1 + static_cast<int>(rng.next_u64() % 6);
        const int db = 1 + static_cast<int>(rng.next_u64() % 6);
        const PDMatrix a = random_pd(rng, da);
        const PDMatrix b = random_pd(rng, db);
        const Matrix c = random_matrix(rng, db, da);

        const Matrix a_inv = a.solve(Matrix(Matrix::Identity(da, da)));
        const Matrix b_inv = b.solve(Matrix(Matrix::Identity(db, db)));
        const Matrix direct = (a.mat() + c.transpose() * b_inv * c).inverse();
        const Matrix b_small = (b.mat() + c * a_inv * c.transpose()).inverse();

        if (rel_err(direct, woodbury_inverse(a, b, c).mat()) > 1e-8)
            return "inversion lemma mismatch at instance " + std::to_string(rep);
        if (rel_err(direct * c.transpose() * b_inv, gain_identity(a, b, c)) > 1e-8)
            return "gain lemma mismatch at instance " + std::to_string(rep);

        Matrix m(da + db, da + db);
        m.topLeftCorner(da, da) = a.mat();
        m.topRightCorner(da, db) = c.transpose();
        m.bottomLeftCorner(db, da) = c;
        m.bottomRightCorner(db, db) = -b.mat();

        Matrix inv1(da + db, da + db);
        inv1.topLeftCorner(da, da) = direct;
        inv1.topRightCorner(da, db) = direct * c.transpose() * b_inv;
        inv1.bottomLeftCorner(db, da) = b_small * c * a_inv;
        inv1.bottomRightCorner(db, db) = -b_small;

        Matrix inv2(da + db, da + db);
        inv2.topLeftCorner(da, da) = a_inv - a_inv * c.transpose() * b_small * c * a_inv;
        inv2.topRightCorner(da, db) = a_inv * c.transpose() * b_small;
        inv2.bottomLeftCorner(db, da) = b_small * c * a_inv;
        inv2.bottomRightCorner(db, db) = -b_small;

        const Matrix id = Matrix::Identity(da + db, da + db);
        if (rel_err(inv1 * m, id) > 1e-8 || rel_err(inv2 * m, id) > 1e-8)
            return "block inverse mismatch at instance " + std::to_string(rep);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs >= 1.0) return "runtime " + std::to_string(secs) + "s exceeds 1s";
    return {};
}

// --- 3. Likelihood exactness ------------------------------------------------

ModelSpec local_level_spec(double q, double h) {
    ModelSpec spec;
    spec.c = Vector::Zero(1);
    spec.T = mat1(1.0);
    spec.R = mat1(1.0);
    spec.Q = mat1(q);
    spec.kind = ObservationKind::Gaussian;
    spec.obs_intercept = vec1(0.0);
    spec.obs_loading = mat1(1.0);
    spec.obs_noise = mat1(h);
    return spec;
}

std::string likelihood_exactness() {
    Rng rng(1003u);
    for (int seed = 0; seed < 20; ++seed) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 4);
        const int k = 1 + static_cast<int>(rng.next_u64() % 2);
        auto m = random_linear_gaussian(rng, d, k);
        const auto run = oracle::simulate(m.trans, m.obs, 60, m.cfg.x0, 3000u + seed);

        const double objective = run_filter(run.observations, m.trans, m.obs, m.cfg).objective;
        const double exact = oracle::exact_kalman_loglik(run.observations, m.trans, m.obs, m.cfg);
        if (rel_err(objective, exact) > 1e-8) {
            std::ostringstream os;
            os << "objective " << objective << " vs exact " << exact << " at model " << seed;
            return os.str();
        }
    }

    // Both psi searches on the same local-level data with the same optimizer.
    const StateTransition truth = build_transition(local_level_spec(0.5, 1.0));
    const GaussianObservation obs(vec1(0.0), mat1(1.0), mat1(1.0));
    const auto run = oracle::simulate(truth, obs, 500, vec1(0.0), 3100u);

    EstimationProblem prob;
    prob.params = {{"q", ParamTransform::Log, 0.4, {ParamSlot::Target::Q, 0, 0}},
                   {"h", ParamTransform::Log, 1.3, {ParamSlot::Target::ObsNoise, 0, 0}}};
    prob.data = run.observations;
    prob.base = local_level_spec(0.4, 1.3);
    prob.filter_cfg = FilterConfig(vec1(0.0), PDMatrix(mat1(1.0)));
    const EstimationResult fit = estimate(prob);

    const auto oracle_objective = [&](const Vector& psi) {
        const ModelSpec at = local_level_spec(std::exp(psi(0)), std::exp(psi(1)));
        const GaussianObservation obs_at(at.obs_intercept, at.obs_loading, at.obs_noise);
        return oracle::exact_kalman_loglik(run.observations, build_transition(at), obs_at,
                                           prob.filter_cfg);
    };
    Vector psi0(2);
    psi0 << std::log(0.4), std::log(1.3);
    const SimplexResult oracle_fit =
        nelder_mead_maximize(oracle_objective, psi0, prob.optimizer.tol, prob.optimizer.max_evals);

    for (int i = 0; i < 2; ++i) {
        const double gap = std::abs(std::log(fit.psi_hat(i)) - oracle_fit.x(i));
        if (gap > 1e-4)
            return "psi[" + std::to_string(i) + "] differs from the oracle optimum by " +
                   std::to_string(gap);
    }
    return {};
}

// --- 4. Smoother correctness ------------------------------------------------

std::string smoother_correctness() {
    Rng rng(1004u);
    for (int rep = 0; rep < 12; ++rep) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 2);
        const int n = 1 + static_cast<int>(rng.next_u64() % 4);
        auto m = random_linear_gaussian(rng, d, 1);
        const auto run = oracle::simulate(m.trans, m.obs, n, m.cfg.x0, 4000u + rep);

        const FilterOutput filt = run_filter(run.observations, m.trans, m.obs, m.cfg);
        const auto smooth = run_smoother(filt, m.trans);
        const auto exact = oracle::exact_joint_smoother(run.observations, m.trans, m.obs, m.cfg);
        for (int t = 0; t < n; ++t) {
            if (rel_err(smooth[t].x_smooth, exact[t].mean) > 1e-8 ||
                rel_err(smooth[t].P_smooth.mat(), exact[t].cov.mat()) > 1e-8)
                return "smoother differs from the joint-Gaussian oracle at fixture " +
                       std::to_string(rep) + ", t = " + std::to_string(t + 1);
        }
    }

    // Fixed point on random inputs.
    for (int rep = 0; rep < 25; ++rep) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 3);
        auto m = random_linear_gaussian(rng, d, 1);
        FilterStep filt;
        filt.t = 1;
        filt.x_filt = random_vector(rng, d);
        filt.P_filt = random_pd(rng, d);
        const Vector x_pred_next = m.trans.c + m.trans.T * filt.x_filt;
        const PDMatrix P_pred_next(SymMatrix(m.trans.T * filt.P_filt.mat() * m.trans.T.transpose() +
                                             m.trans.R * m.trans.Q.mat() * m.trans.R.transpose()));
        const SmootherStep next{2, x_pred_next, P_pred_next.sym()};
        const SmootherStep out = rts_step(filt, x_pred_next, P_pred_next, next, m.trans);
        if (rel_err(out.x_smooth, filt.x_filt) > 1e-9 ||
            rel_err(out.P_smooth.mat(), filt.P_filt.mat()) > 1e-9)
            return "fixed-point property violated at instance " + std::to_string(rep);
    }
    return {};
}

// --- 5. Mode-update correctness ----------------------------------------------

std::string mode_update_correctness() {
    const PDMatrix P1(mat1(1.0));
    const oracle::GridBounds bounds{vec1(-6.0), vec1(6.0)};
    const FilterConfig cfg(vec1(0.0), P1);

    struct Fixture {
        std::string name;
        const ObservationModel* model;
        Vector y;
        Vector x_pred;
        PDMatrix P_pred;
    };
    const GaussianObservation gaussian(vec1(0.0), mat1(1.0), mat1(1.0));
    const PoissonObservation poisson(vec1(0.0), mat1(1.0));
    const BernoulliObservation bernoulli(vec1(0.0), mat1(1.0));

    std::vector<Fixture> fixtures = {
        {"gaussian", &gaussian, vec1(1.5), vec1(0.0), PDMatrix(mat1(2.0))},
        {"poisson y=0", &poisson, vec1(0.0), vec1(0.0), P1},
        {"poisson y=1", &poisson, vec1(1.0), vec1(0.0), P1},
        {"poisson y=5", &poisson, vec1(5.0), vec1(0.0), P1},
        {"bernoulli y=1", &bernoulli, vec1(1.0), vec1(0.0), P1},
        {"bernoulli y=0", &bernoulli, vec1(0.0), vec1(0.3), P1},
    };
    for (const Fixture& f : fixtures) {
        const auto r = bellman_update(f.y, f.x_pred, f.P_pred, *f.model, cfg);
        const Vector grid = oracle::grid_mode_search(f.y, f.x_pred, f.P_pred, *f.model, bounds);
        if (std::abs(r.x_filt(0) - grid(0)) > 1e-4)
            return f.name + ": mode " + std::to_string(r.x_filt(0)) + " vs grid " +
                   std::to_string(grid(0));
    }

    const NonlinearGaussianObservation squared(
        vec1(0.0), [](const Vector& x) { return Vector(vec1(x(0) * x(0))); },
        [](const Vector& x) { return Matrix(mat1(2.0 * x(0))); }, mat1(1.0), 1);
    const auto gn = gauss_newton_update(vec1(1.0), vec1(1.0), P1, squared,
                                        FilterConfig(vec1(1.0), P1));
    const Vector grid = oracle::grid_mode_search(vec1(1.0), vec1(1.0), P1, squared,
                                                 {vec1(-3.0), vec1(3.0)});
    if (std::abs(gn.x_filt(0) - grid(0)) > 1e-4)
        return "gauss-newton x^2 fixture: " + std::to_string(gn.x_filt(0)) + " vs grid " +
               std::to_string(grid(0));
    return {};
}

// --- 6. Online-learning decay -------------------------------------------------

std::string online_learning_decay() {
    StateTransition online(Vector::Zero(1), mat1(1.0), mat1(1.0), mat1(0.0));
    const PoissonObservation obs(vec1(0.0), mat1(1.0));
    const auto run = oracle::simulate(online, obs, 2000, vec1(0.3), 1006u);
    const FilterOutput out =
        run_filter(run.observations, online, obs, FilterConfig(vec1(0.0), PDMatrix(mat1(1.0))));

    const double at_100 = 100.0 * out.steps[99].P_filt.mat().trace();
    for (int t = 100; t <= 2000; ++t) {
        const double scaled = t * out.steps[t - 1].P_filt.mat().trace();
        if (scaled > 2.0 * at_100)
            return "t * trace(P) = " + std::to_string(scaled) + " at t = " + std::to_string(t) +
                   " vs " + std::to_string(at_100) + " at t = 100";
    }
    return {};
}

// --- 7. PSD and penalty invariants ---------------------------------------------

std::string psd_penalty_invariants() {
    Rng rng(1007u);
    int checked_steps = 0;

    const auto check_output = [&](const FilterOutput& out) -> std::string {
        for (const FilterStep& step : out.steps) {
            ++checked_steps;
            const double scale = std::max(1.0, step.P_pred.mat().cwiseAbs().maxCoeff());
            if (test_support::min_eigenvalue(step.P_pred.mat() - step.P_filt.mat()) <
                -1e-10 * scale)
                return "P_pred - P_filt not PSD at t = " + std::to_string(step.t);
            const Vector diff = step.x_filt - step.x_pred;
            const double penalty = 0.5 * (step.P_pred.logdet() - step.P_filt.logdet()) +
                                   0.5 * step.P_pred.quad_form(diff);
            if (penalty < -1e-10)
                return "penalty " + std::to_string(penalty) + " at t = " + std::to_string(step.t);
        }
        return {};
    };

    // Gaussian fixtures, closed form and Newton.
    for (int rep = 0; rep < 4; ++rep) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 3);
        auto m = random_linear_gaussian(rng, d, 1);
        const auto run = oracle::simulate(m.trans, m.obs, 60, m.cfg.x0, 7000u + rep);
        for (UpdatePath path : {UpdatePath::Auto, UpdatePath::ForceOptimizer}) {
            const std::string err =
                check_output(run_filter(run.observations, m.trans, m.obs, m.cfg, path));
            if (!err.empty()) return "gaussian fixture " + std::to_string(rep) + ": " + err;
        }
    }

    // Count and binary fixtures through the mode search, Newton and BFGS.
    const StateTransition trans = local_level(0.4);
    const FilterConfig newton_cfg(vec1(0.0), PDMatrix(mat1(1.0)));
    FilterConfig bfgs_cfg = newton_cfg;
    bfgs_cfg.optimizer = InnerOptimizer::QuasiNewton;

    const PoissonObservation poisson(vec1(0.1), mat1(1.0));
    const BernoulliObservation bernoulli(vec1(0.0), mat1(1.0));
    for (const ObservationModel* model :
         {static_cast<const ObservationModel*>(&poisson),
          static_cast<const ObservationModel*>(&bernoulli)}) {
        const auto run = oracle::simulate(trans, *model, 150, vec1(0.0), 7100u);
        const FilterConfig* cfgs[] = {&newton_cfg, &bfgs_cfg};
        for (const FilterConfig* cfg : cfgs) {
            const std::string err = check_output(run_filter(run.observations, trans, *model, *cfg));
            if (!err.empty()) return err;
        }
    }

    // Nonlinear-Gaussian fixture through the Gauss-Newton path.
    const NonlinearGaussianObservation nonlinear(
        vec1(0.0), [](const Vector& x) { return Vector(vec1(x(0) + 0.3 * std::sin(x(0)))); },
        [](const Vector& x) { return Matrix(mat1(1.0 + 0.3 * std::cos(x(0)))); }, mat1(1.0), 1);
    const auto run = oracle::simulate(trans, nonlinear, 100, vec1(0.0), 7200u);
    const std::string err = check_output(run_filter(run.observations, trans, nonlinear, newton_cfg));
    if (!err.empty()) return "nonlinear fixture: " + err;

    if (checked_steps < 1000)
        return "only " + std::to_string(checked_steps) + " steps were exercised";
    return {};
}

// --- 8. Particle-filter cross-check ---------------------------------------------

std::string particle_filter_crosscheck() {
    const StateTransition trans = local_level(0.1);
    const PoissonObservation obs(vec1(0.0), mat1(1.0));
    const FilterConfig cfg(vec1(0.0), PDMatrix(mat1(1.0)));
    const int n = 500, n_particles = 10000, n_seeds = 20;

    double bellman_sse = 0.0, pf_sse = 0.0;
    double bellman_secs = 0.0, pf_secs = 0.0;
    for (int seed = 0; seed < n_seeds; ++seed) {
        const auto run = oracle::simulate(trans, obs, n, vec1(0.0), 8000u + seed);

        const auto t0 = std::chrono::steady_clock::now();
        const FilterOutput bellman = run_filter(run.observations, trans, obs, cfg);
        const auto t1 = std::chrono::steady_clock::now();
        const auto pf = oracle::bootstrap_particle_filter(run.observations, trans, obs,
                                                          n_particles, 9000u + seed, cfg);
        const auto t2 = std::chrono::steady_clock::now();
        bellman_secs += std::chrono::duration<double>(t1 - t0).count();
        pf_secs += std::chrono::duration<double>(t2 - t1).count();

        for (int t = 0; t < n; ++t) {
            const double truth = run.states[t](0);
            bellman_sse += std::pow(bellman.steps[t].x_filt(0) - truth, 2);
            pf_sse += std::pow(pf[t].mean(0) - truth, 2);
        }
    }
    const double ratio = std::sqrt(bellman_sse / pf_sse);
    if (ratio < 0.8 || ratio > 1.2)
        return "state-RMSE ratio " + std::to_string(ratio) + " outside [0.8, 1.2]";
    if (pf_secs < 50.0 * bellman_secs)
        return "speedup " + std::to_string(pf_secs / bellman_secs) + "x below 50x";
    return {};
}

// --- 9. Gradient checks ------------------------------------------------------

std::string gradient_checks() {
    Rng rng(1009u);
    const Matrix Z3 = random_matrix(rng, 3, 2);
    const Matrix G = random_matrix(rng, 3, 3);
    const GaussianObservation gaussian(random_vector(rng, 3), Z3,
                                       Matrix(G.transpose() * G + Matrix::Identity(3, 3)));
    const PoissonObservation poisson(Vector::Constant(2, -0.3), random_matrix(rng, 2, 2));
    const BernoulliObservation bernoulli(random_vector(rng, 2), random_matrix(rng, 2, 2));
    const RippleObservation ripple(random_vector(rng, 2), random_matrix(rng, 2, 2));
    const NonlinearGaussianObservation nonlinear(
        Vector::Zero(2),
        [](const Vector& x) {
            Vector out(2);
            out << x(0) * x(0) + 0.5 * x(1), std::sin(x(1)) + x(0);
            return out;
        },
        [](const Vector& x) {
            Matrix j(2, 2);
            j << 2.0 * x(0), 0.5, 1.0, std::cos(x(1));
            return j;
        },
        Matrix::Identity(2, 2), 2);

    const auto score_check = [&](const ObservationModel& m, const Vector& y,
                                 const Vector& x) -> bool {
        const Vector g = m.score(y, x);
        const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
        for (int i = 0; i < x.size(); ++i) {
            const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
            Vector xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            const double fd = (m.log_density(y, xp) - m.log_density(y, xm)) / (2 * h);
            if (std::abs(fd - g(i)) > 1e-6 * scale) return false;
        }
        return true;
    };
    const auto hessian_check = [&](const ObservationModel& m, const Vector& y,
                                   const Vector& x) -> bool {
        const Matrix nh = m.neg_hessian(y, x).mat();
        const double scale = std::max(1.0, nh.cwiseAbs().maxCoeff());
        for (int i = 0; i < x.size(); ++i) {
            const double h = 1e-5 * std::max(1.0, std::abs(x(i)));
            Vector xp = x, xm = x;
            xp(i) += h;
            xm(i) -= h;
            const Vector fd = (m.score(y, xp) - m.score(y, xm)) / (2 * h);
            for (int j = 0; j < x.size(); ++j)
                if (std::abs(-fd(j) - nh(j, i)) > 1e-5 * scale) return false;
        }
        return true;
    };

    for (const ObservationModel* m :
         {static_cast<const ObservationModel*>(&gaussian),
          static_cast<const ObservationModel*>(&poisson),
          static_cast<const ObservationModel*>(&bernoulli),
          static_cast<const ObservationModel*>(&ripple)}) {
        for (int rep = 0; rep < 100; ++rep) {
            const Vector x = random_vector(rng, m->state_dim());
            const Vector y = m->sample(rng, x);
            if (!score_check(*m, y, x)) return "score mismatch (probe " + std::to_string(rep) + ")";
            if (!hessian_check(*m, y, x))
                return "neg_hessian mismatch (probe " + std::to_string(rep) + ")";
        }
    }

    // Nonlinear-Gaussian: the score is exact everywhere; its curvature drops
    // second derivatives of the map, which vanish at zero-residual probes.
    for (int rep = 0; rep < 100; ++rep) {
        const Vector x = random_vector(rng, 2);
        const Vector y_general = nonlinear.sample(rng, x);
        if (!score_check(nonlinear, y_general, x))
            return "nonlinear score mismatch (probe " + std::to_string(rep) + ")";
        const Vector y_zero_residual = nonlinear.map(x);
        if (!hessian_check(nonlinear, y_zero_residual, x))
            return "nonlinear neg_hessian mismatch (probe " + std::to_string(rep) + ")";
    }
    return {};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "kalman-reduction", kalman_reduction},
        {2, "matrix-lemmas", matrix_lemmas},
        {3, "likelihood-exactness", likelihood_exactness},
        {4, "smoother-correctness", smoother_correctness},
        {5, "mode-update-correctness", mode_update_correctness},
        {6, "online-learning-decay", online_learning_decay},
        {7, "psd-penalty-invariants", psd_penalty_invariants},
        {8, "particle-filter-crosscheck", particle_filter_crosscheck},
        {9, "gradient-checks", gradient_checks},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        try {
            detail = c.body();
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (detail.empty()) {
            std::printf("PASS %d %s (%.2fs)\n", c.number, c.name.c_str(), secs);
        } else {
            std::printf("FAIL %d %s (%.2fs): %s\n", c.number, c.name.c_str(), secs,
                        detail.c_str());
            ++failures;
        }
    }
    return failures == 0 ? 0 : 1;
}
