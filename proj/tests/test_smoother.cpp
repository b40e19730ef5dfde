#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bellman/oracle.hpp"
#include "bellman/smoother.hpp"
#include "support.hpp"

using namespace bellman;
using test_support::is_psd;
using test_support::random_linear_gaussian;
using test_support::random_vector;
using test_support::rel_err;

namespace {

Vector vec1(double v) { return Vector::Constant(1, v); }
Matrix mat1(double v) { return Matrix::Constant(1, 1, v); }

StateTransition local_level(double q) {
    return {Vector::Zero(1), mat1(1.0), mat1(1.0), mat1(q)};
}

GaussianObservation scalar_gaussian() { return {vec1(0.0), mat1(1.0), mat1(1.0)}; }

FilterConfig scalar_cfg() { return {vec1(0.0), PDMatrix(mat1(1.0))}; }

}  // namespace

TEST_CASE("rts_step: next smoothed equal to next predicted returns the filtered moments") {
    Rng rng(3u);
    for (int rep = 0; rep < 25; ++rep) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 3);
        auto m = random_linear_gaussian(rng, d, 1);

        FilterStep filt;
        filt.t = 4;
        filt.x_filt = random_vector(rng, d);
        filt.P_filt = test_support::random_pd(rng, d);
        const Vector x_pred_next = m.trans.c + m.trans.T * filt.x_filt;
        const PDMatrix P_pred_next(SymMatrix(m.trans.T * filt.P_filt.mat() *
                                                 m.trans.T.transpose() +
                                             m.trans.R * m.trans.Q.mat() * m.trans.R.transpose()));

        const SmootherStep next{5, x_pred_next, P_pred_next.sym()};
        const SmootherStep out = rts_step(filt, x_pred_next, P_pred_next, next, m.trans);
        CHECK(rel_err(out.x_smooth, filt.x_filt) < 1e-10);
        CHECK(rel_err(out.P_smooth.mat(), filt.P_filt.mat()) < 1e-10);
    }
}

TEST_CASE("rts_step: identity transition with matching uncertainties has unit gain") {
    // T = I and P_pred_next = P_filt (the Q = 0 case) make G = I, so the
    // smoothed state is exactly the next smoothed state.
    StateTransition trans(Vector::Zero(2), Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                          Matrix::Zero(2, 2));
    Rng rng(5u);
    FilterStep filt;
    filt.t = 1;
    filt.x_filt = random_vector(rng, 2);
    filt.P_filt = test_support::random_pd(rng, 2);
    const Vector x_pred_next = filt.x_filt;
    const PDMatrix P_pred_next = filt.P_filt;

    SmootherStep next{2, random_vector(rng, 2), test_support::random_pd(rng, 2).sym()};
    const SmootherStep out = rts_step(filt, x_pred_next, P_pred_next, next, trans);
    CHECK(rel_err(out.x_smooth, next.x_smooth) < 1e-12);
}

TEST_CASE("run_smoother: scalar local level n = 2 against the joint-Gaussian oracle") {
    const StateTransition trans = local_level(1.0);
    const GaussianObservation obs = scalar_gaussian();
    const FilterConfig cfg = scalar_cfg();
    const std::vector<Vector> data{vec1(1.5), vec1(0.5)};

    const FilterOutput filt = run_filter(data, trans, obs, cfg);
    const auto smooth = run_smoother(filt, trans);
    const auto exact = oracle::exact_joint_smoother(data, trans, obs, cfg);

    REQUIRE(smooth.size() == 2);
    for (int t = 0; t < 2; ++t) {
        CHECK(rel_err(smooth[t].x_smooth, exact[t].mean) < 1e-10);
        CHECK(rel_err(smooth[t].P_smooth.mat(), exact[t].cov.mat()) < 1e-10);
    }
}

TEST_CASE("run_smoother: n = 1 output equals the filtered quantities") {
    const StateTransition trans = local_level(1.0);
    const GaussianObservation obs = scalar_gaussian();
    const FilterOutput filt = run_filter({vec1(0.7)}, trans, obs, scalar_cfg());
    const auto smooth = run_smoother(filt, trans);
    REQUIRE(smooth.size() == 1);
    CHECK(smooth[0].x_smooth == filt.steps[0].x_filt);
    CHECK(smooth[0].P_smooth.mat() == filt.steps[0].P_filt.mat());
}

TEST_CASE("run_smoother: matches the dense joint-Gaussian smoother on random fixtures") {
    Rng rng(7u);
    for (int rep = 0; rep < 8; ++rep) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 2);
        const int n = 1 + static_cast<int>(rng.next_u64() % 4);
        auto m = random_linear_gaussian(rng, d, 1);
        const auto run = oracle::simulate(m.trans, m.obs, n, m.cfg.x0, 50u + rep);

        const FilterOutput filt = run_filter(run.observations, m.trans, m.obs, m.cfg);
        const auto smooth = run_smoother(filt, m.trans);
        const auto exact = oracle::exact_joint_smoother(run.observations, m.trans, m.obs, m.cfg);
        REQUIRE(smooth.size() == static_cast<std::size_t>(n));
        for (int t = 0; t < n; ++t) {
            CHECK(rel_err(smooth[t].x_smooth, exact[t].mean) < 1e-8);
            CHECK(rel_err(smooth[t].P_smooth.mat(), exact[t].cov.mat()) < 1e-8);
        }
    }
}

TEST_CASE("run_smoother: output is invariant to which forward path produced the moments") {
    Rng rng(11u);
    auto m = random_linear_gaussian(rng, 2, 2);
    const auto run = oracle::simulate(m.trans, m.obs, 40, m.cfg.x0, 77u);

    const FilterOutput closed = run_filter(run.observations, m.trans, m.obs, m.cfg);
    const FilterOutput newton =
        run_filter(run.observations, m.trans, m.obs, m.cfg, UpdatePath::ForceOptimizer);
    const auto a = run_smoother(closed, m.trans);
    const auto b = run_smoother(newton, m.trans);
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(rel_err(a[t].x_smooth, b[t].x_smooth) < 1e-8);
        CHECK(rel_err(a[t].P_smooth.mat(), b[t].P_smooth.mat()) < 1e-8);
    }
}

TEST_CASE("run_smoother: Poisson forward pass keeps the PSD orderings") {
    const StateTransition trans = local_level(0.4);
    const PoissonObservation obs(vec1(0.2), mat1(1.0));
    const auto run = oracle::simulate(trans, obs, 60, vec1(0.0), 13u);
    const FilterOutput filt = run_filter(run.observations, trans, obs, scalar_cfg());
    const auto smooth = run_smoother(filt, trans);

    for (std::size_t t = 0; t < smooth.size(); ++t) {
        CHECK(is_psd(smooth[t].P_smooth.mat(), -1e-8));
        CHECK(is_psd(filt.steps[t].P_filt.mat() - smooth[t].P_smooth.mat(), -1e-8));
    }
}

TEST_CASE("run_smoother: rerunning on the same input is bitwise identical") {
    const StateTransition trans = local_level(0.5);
    const GaussianObservation obs = scalar_gaussian();
    const auto run = oracle::simulate(trans, obs, 30, vec1(0.0), 17u);
    const FilterOutput filt = run_filter(run.observations, trans, obs, scalar_cfg());

    const auto a = run_smoother(filt, trans);
    const auto b = run_smoother(filt, trans);
    for (std::size_t t = 0; t < a.size(); ++t) {
        CHECK(a[t].x_smooth == b[t].x_smooth);
        CHECK(a[t].P_smooth.mat() == b[t].P_smooth.mat());
    }
}

TEST_CASE("run_smoother: empty filter output is rejected") {
    CHECK_THROWS_AS(run_smoother(FilterOutput{}, local_level(0.5)), EmptyFilterOutput);
}
