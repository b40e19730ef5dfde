#include <benchmark/benchmark.h>

#include "bellman/filter.hpp"
#include "bellman/oracle.hpp"
#include "bellman/smoother.hpp"

using namespace bellman;

namespace {

struct Fixture {
    StateTransition trans;
    GaussianObservation gaussian;
    PoissonObservation poisson;
    FilterConfig cfg;
    std::vector<Vector> gaussian_data;
    std::vector<Vector> poisson_data;
};

Fixture make_fixture(int d, int n) {
    Rng rng(99u);
    Matrix T = 0.6 * Matrix::Identity(d, d);
    for (int i = 0; i + 1 < d; ++i) T(i, i + 1) = 0.2;
    Matrix Q = 0.3 * Matrix::Identity(d, d);
    Matrix Z = Matrix::Identity(d, d);
    Matrix H = Matrix::Identity(d, d);

    StateTransition trans(Vector::Zero(d), T, Matrix::Identity(d, d), Q);
    GaussianObservation gaussian(Vector::Zero(d), Z, H);
    PoissonObservation poisson(Vector::Zero(d), Z);
    FilterConfig cfg(Vector::Zero(d), PDMatrix::identity(d));

    auto g = oracle::simulate(trans, gaussian, n, Vector::Zero(d), 5u);
    auto p = oracle::simulate(trans, poisson, n, Vector::Zero(d), 5u);
    return {std::move(trans), std::move(gaussian), std::move(poisson), std::move(cfg),
            std::move(g.observations), std::move(p.observations)};
}

void BM_KalmanUpdate(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Fixture f = make_fixture(d, 1);
    const Vector x = Vector::Zero(d);
    const PDMatrix P = PDMatrix::identity(d);
    for (auto _ : state) {
        auto r = kalman_update(f.gaussian_data[0], x, P, f.gaussian);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_KalmanUpdate)->Arg(2)->Arg(10)->Arg(50);

void BM_BellmanUpdateGaussian(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Fixture f = make_fixture(d, 1);
    const Vector x = Vector::Zero(d);
    const PDMatrix P = PDMatrix::identity(d);
    for (auto _ : state) {
        auto r = bellman_update(f.gaussian_data[0], x, P, f.gaussian, f.cfg);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_BellmanUpdateGaussian)->Arg(2)->Arg(10)->Arg(50);

void BM_BellmanUpdatePoisson(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Fixture f = make_fixture(d, 1);
    const Vector x = Vector::Zero(d);
    const PDMatrix P = PDMatrix::identity(d);
    for (auto _ : state) {
        auto r = bellman_update(f.poisson_data[0], x, P, f.poisson, f.cfg);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_BellmanUpdatePoisson)->Arg(2)->Arg(10)->Arg(50);

void BM_BellmanUpdatePoissonBfgs(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    Fixture f = make_fixture(d, 1);
    FilterConfig cfg = f.cfg;
    cfg.optimizer = InnerOptimizer::QuasiNewton;
    const Vector x = Vector::Zero(d);
    const PDMatrix P = PDMatrix::identity(d);
    for (auto _ : state) {
        auto r = bellman_update(f.poisson_data[0], x, P, f.poisson, cfg);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(BM_BellmanUpdatePoissonBfgs)->Arg(2)->Arg(10)->Arg(50);

void BM_RunFilterPoisson(benchmark::State& state) {
    Fixture f = make_fixture(1, 1000);
    for (auto _ : state) {
        auto out = run_filter(f.poisson_data, f.trans, f.poisson, f.cfg);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_RunFilterPoisson);

void BM_RunSmootherGaussian(benchmark::State& state) {
    Fixture f = make_fixture(2, 500);
    const FilterOutput filt = run_filter(f.gaussian_data, f.trans, f.gaussian, f.cfg);
    for (auto _ : state) {
        auto out = run_smoother(filt, f.trans);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_RunSmootherGaussian);

void BM_ParticleFilterPoisson(benchmark::State& state) {
    Fixture f = make_fixture(1, 100);
    for (auto _ : state) {
        auto out = oracle::bootstrap_particle_filter(f.poisson_data, f.trans, f.poisson,
                                                     static_cast<int>(state.range(0)), 3u, f.cfg);
        benchmark::DoNotOptimize(out);
    }
}
BENCHMARK(BM_ParticleFilterPoisson)->Arg(1000)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
