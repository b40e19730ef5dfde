#include "bellman/model.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

namespace bellman {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) throw InvalidObservation(std::string(what) + " contains non-finite entries");
}

bool has_nonzero(const Matrix& m) {
    return m.cwiseAbs().maxCoeff() > 0.0;
}

// log(1 + e^eta) without overflow
double softplus(double eta) {
    if (eta > 0.0) return eta + std::log1p(std::exp(-eta));
    return std::log1p(std::exp(eta));
}

double logistic(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

}  // namespace

StateTransition::StateTransition(Vector c_in, Matrix T_in, Matrix R_in, const Matrix& Q_in)
    : c(std::move(c_in)), T(std::move(T_in)), R(std::move(R_in)), Q(SymMatrix(Q_in)) {
    const int d = state_dim();
    const int m = Q.dim();
    if (T.rows() != d || T.cols() != d)
        throw DimensionMismatch("transition: T must be " + std::to_string(d) + "x" + std::to_string(d));
    if (R.rows() != d || R.cols() != m)
        throw DimensionMismatch("transition: R must be " + std::to_string(d) + "x" + std::to_string(m));
    if (!has_nonzero(T))
        throw InvalidModel("transition: T must contain at least one non-zero entry");
    if (m > 0) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(Q.mat());
        const double lo = es.eigenvalues().minCoeff();
        const double hi = std::max(es.eigenvalues().maxCoeff(), 0.0);
        if (lo < -1e-10 * std::max(hi, 1.0))
            throw InvalidModel("transition: Q is not positive semi-definite");
    }
}

void ObservationModel::validate(const Vector& y) const {
    if (y.size() != obs_dim())
        throw InvalidObservation("observation has length " + std::to_string(y.size()) +
                                 ", expected " + std::to_string(obs_dim()));
    require_finite(y, "observation");
}

// ---------------------------------------------------------------------------
// Gaussian

GaussianObservation::GaussianObservation(Vector d, Matrix Z, const Matrix& H)
    : d_(std::move(d)), Z_(std::move(Z)), H_(H) {
    if (Z_.rows() != d_.size() || H_.dim() != d_.size())
        throw DimensionMismatch("gaussian observation: d, Z, H dimensions disagree");
    if (!has_nonzero(Z_))
        throw InvalidModel("gaussian observation: Z must contain at least one non-zero entry");
    info_ = SymMatrix(Z_.transpose() * H_.solve(Z_));
    log_norm_ = -0.5 * obs_dim() * kLog2Pi - 0.5 * H_.logdet();
}

double GaussianObservation::log_density(const Vector& y, const Vector& x) const {
    validate(y);
    const Vector r = y - d_ - Z_ * x;
    return log_norm_ - 0.5 * H_.quad_form(r);
}

Vector GaussianObservation::score(const Vector& y, const Vector& x) const {
    validate(y);
    const Vector r = y - d_ - Z_ * x;
    return Z_.transpose() * H_.solve(r);
}

SymMatrix GaussianObservation::neg_hessian(const Vector&, const Vector&) const { return info_; }

SymMatrix GaussianObservation::fisher(const Vector&) const { return info_; }

Vector GaussianObservation::sample(Rng& rng, const Vector& x) const {
    Vector z(obs_dim());
    for (int i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return d_ + Z_ * x + H_.factor() * z;
}

// ---------------------------------------------------------------------------
// Poisson

PoissonObservation::PoissonObservation(Vector delta, Matrix Z)
    : delta_(std::move(delta)), Z_(std::move(Z)) {
    if (Z_.rows() != delta_.size())
        throw DimensionMismatch("poisson observation: delta and Z dimensions disagree");
}

Vector PoissonObservation::intensities(const Vector& x) const {
    return (delta_ + Z_ * x).array().exp();
}

void PoissonObservation::validate(const Vector& y) const {
    ObservationModel::validate(y);
    for (int i = 0; i < y.size(); ++i) {
        if (y(i) < 0.0 || std::abs(y(i) - std::round(y(i))) > 1e-9)
            throw InvalidObservation("poisson observation must be a nonnegative integer count, got " +
                                     std::to_string(y(i)));
    }
}

double PoissonObservation::log_density(const Vector& y, const Vector& x) const {
    validate(y);
    const Vector eta = delta_ + Z_ * x;
    double ll = 0.0;
    for (int i = 0; i < y.size(); ++i)
        ll += y(i) * eta(i) - std::exp(eta(i)) - std::lgamma(y(i) + 1.0);
    return ll;
}

Vector PoissonObservation::score(const Vector& y, const Vector& x) const {
    validate(y);
    return Z_.transpose() * (y - intensities(x));
}

SymMatrix PoissonObservation::neg_hessian(const Vector&, const Vector& x) const {
    return fisher(x);
}

SymMatrix PoissonObservation::fisher(const Vector& x) const {
    const Vector lambda = intensities(x);
    return SymMatrix(Z_.transpose() * lambda.asDiagonal() * Z_);
}

Vector PoissonObservation::sample(Rng& rng, const Vector& x) const {
    const Vector lambda = intensities(x);
    Vector y(obs_dim());
    for (int i = 0; i < y.size(); ++i) y(i) = static_cast<double>(rng.poisson(lambda(i)));
    return y;
}

// ---------------------------------------------------------------------------
// Bernoulli

BernoulliObservation::BernoulliObservation(Vector delta, Matrix Z)
    : delta_(std::move(delta)), Z_(std::move(Z)) {
    if (Z_.rows() != delta_.size())
        throw DimensionMismatch("bernoulli observation: delta and Z dimensions disagree");
}

Vector BernoulliObservation::probabilities(const Vector& x) const {
    Vector eta = delta_ + Z_ * x;
    for (int i = 0; i < eta.size(); ++i) eta(i) = logistic(eta(i));
    return eta;
}

void BernoulliObservation::validate(const Vector& y) const {
    ObservationModel::validate(y);
    for (int i = 0; i < y.size(); ++i) {
        if (y(i) != 0.0 && y(i) != 1.0)
            throw InvalidObservation("bernoulli observation must be 0 or 1, got " +
                                     std::to_string(y(i)));
    }
}

double BernoulliObservation::log_density(const Vector& y, const Vector& x) const {
    validate(y);
    const Vector eta = delta_ + Z_ * x;
    double ll = 0.0;
    for (int i = 0; i < y.size(); ++i) ll += y(i) * eta(i) - softplus(eta(i));
    return ll;
}

Vector BernoulliObservation::score(const Vector& y, const Vector& x) const {
    validate(y);
    return Z_.transpose() * (y - probabilities(x));
}

SymMatrix BernoulliObservation::neg_hessian(const Vector&, const Vector& x) const {
    return fisher(x);
}

SymMatrix BernoulliObservation::fisher(const Vector& x) const {
    const Vector p = probabilities(x);
    const Vector w = p.array() * (1.0 - p.array());
    return SymMatrix(Z_.transpose() * w.asDiagonal() * Z_);
}

Vector BernoulliObservation::sample(Rng& rng, const Vector& x) const {
    const Vector p = probabilities(x);
    Vector y(obs_dim());
    for (int i = 0; i < y.size(); ++i) y(i) = rng.uniform() < p(i) ? 1.0 : 0.0;
    return y;
}

// ---------------------------------------------------------------------------
// Nonlinear Gaussian

NonlinearGaussianObservation::NonlinearGaussianObservation(Vector d, Map fn, Jacobian jac,
                                                           const Matrix& H, int state_dim)
    : d_(std::move(d)), fn_(std::move(fn)), jac_(std::move(jac)), H_(H), state_dim_(state_dim) {
    if (H_.dim() != d_.size())
        throw DimensionMismatch("nonlinear observation: d and H dimensions disagree");
    log_norm_ = -0.5 * obs_dim() * kLog2Pi - 0.5 * H_.logdet();
}

double NonlinearGaussianObservation::log_density(const Vector& y, const Vector& x) const {
    validate(y);
    const Vector r = y - d_ - fn_(x);
    return log_norm_ - 0.5 * H_.quad_form(r);
}

Vector NonlinearGaussianObservation::score(const Vector& y, const Vector& x) const {
    validate(y);
    const Vector r = y - d_ - fn_(x);
    return jac_(x).transpose() * H_.solve(r);
}

SymMatrix NonlinearGaussianObservation::neg_hessian(const Vector&, const Vector& x) const {
    return fisher(x);
}

SymMatrix NonlinearGaussianObservation::fisher(const Vector& x) const {
    const Matrix j = jac_(x);
    return SymMatrix(j.transpose() * H_.solve(j));
}

Vector NonlinearGaussianObservation::sample(Rng& rng, const Vector& x) const {
    Vector z(obs_dim());
    for (int i = 0; i < z.size(); ++i) z(i) = rng.normal();
    return d_ + fn_(x) + H_.factor() * z;
}

bool NonlinearGaussianObservation::jacobian_matches_fd(const Vector& x, double rel_tol) const {
    const Matrix j = jac_(x);
    const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
    for (int i = 0; i < x.size(); ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(x(i)));
        Vector xp = x, xm = x;
        xp(i) += h;
        xm(i) -= h;
        const Vector fd = (fn_(xp) - fn_(xm)) / (2.0 * h);
        for (int r = 0; r < j.rows(); ++r)
            if (std::abs(fd(r) - j(r, i)) > rel_tol * scale) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Ripple (non-concave check stub)

namespace {

// Simpson quadrature of f over [-15, 15]; the ripple integrands decay like
// exp(-u^2/2 + a), so the truncation error is far below double precision.
template <typename F>
double simpson(F&& f) {
    const int n = 6000;  // even
    const double lo = -15.0, hi = 15.0;
    const double h = (hi - lo) / n;
    double acc = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

}  // namespace

RippleObservation::RippleObservation(Vector delta, Matrix Z, double amplitude)
    : delta_(std::move(delta)), Z_(std::move(Z)), amplitude_(amplitude) {
    if (Z_.rows() != delta_.size())
        throw DimensionMismatch("ripple observation: delta and Z dimensions disagree");
    const double a = amplitude_;
    const double norm = simpson([a](double u) { return std::exp(-0.5 * u * u + a * std::cos(u)); });
    const double cos_moment =
        simpson([a](double u) { return std::cos(u) * std::exp(-0.5 * u * u + a * std::cos(u)); });
    log_norm_ = std::log(norm);
    mean_cos_ = cos_moment / norm;
}

double RippleObservation::log_density(const Vector& y, const Vector& x) const {
    validate(y);
    const Vector u = y - delta_ - Z_ * x;
    double ll = 0.0;
    for (int i = 0; i < u.size(); ++i)
        ll += -0.5 * u(i) * u(i) + amplitude_ * std::cos(u(i)) - log_norm_;
    return ll;
}

Vector RippleObservation::score(const Vector& y, const Vector& x) const {
    validate(y);
    const Vector u = y - delta_ - Z_ * x;
    Vector g = Vector::Zero(state_dim());
    for (int i = 0; i < u.size(); ++i)
        g += (u(i) + amplitude_ * std::sin(u(i))) * Z_.row(i).transpose();
    return g;
}

SymMatrix RippleObservation::neg_hessian(const Vector& y, const Vector& x) const {
    validate(y);
    const Vector u = y - delta_ - Z_ * x;
    Matrix h = Matrix::Zero(state_dim(), state_dim());
    for (int i = 0; i < u.size(); ++i)
        h += (1.0 + amplitude_ * std::cos(u(i))) * Z_.row(i).transpose() * Z_.row(i);
    return SymMatrix(h);
}

SymMatrix RippleObservation::fisher(const Vector&) const {
    Matrix h = Matrix::Zero(state_dim(), state_dim());
    for (int i = 0; i < Z_.rows(); ++i)
        h += (1.0 + amplitude_ * mean_cos_) * Z_.row(i).transpose() * Z_.row(i);
    return SymMatrix(h);
}

Vector RippleObservation::sample(Rng& rng, const Vector& x) const {
    const Vector center = delta_ + Z_ * x;
    Vector y(obs_dim());
    for (int i = 0; i < y.size(); ++i) {
        // Rejection from N(0,1): accept u with probability exp(a (cos u - 1)).
        double u;
        do {
            u = rng.normal();
        } while (rng.uniform() >= std::exp(amplitude_ * (std::cos(u) - 1.0)));
        y(i) = center(i) + u;
    }
    return y;
}

// ---------------------------------------------------------------------------
// ModelSpec materialization

StateTransition build_transition(const ModelSpec& spec) {
    return StateTransition(spec.c, spec.T, spec.R, spec.Q);
}

std::unique_ptr<ObservationModel> build_observation(const ModelSpec& spec) {
    switch (spec.kind) {
        case ObservationKind::Gaussian:
            return std::make_unique<GaussianObservation>(spec.obs_intercept, spec.obs_loading,
                                                         spec.obs_noise);
        case ObservationKind::Poisson:
            return std::make_unique<PoissonObservation>(spec.obs_intercept, spec.obs_loading);
        case ObservationKind::Bernoulli:
            return std::make_unique<BernoulliObservation>(spec.obs_intercept, spec.obs_loading);
        case ObservationKind::NonconcaveStub:
            return std::make_unique<RippleObservation>(spec.obs_intercept, spec.obs_loading,
                                                       spec.ripple_amplitude);
    }
    throw InvalidModel("unknown observation kind");
}

}  // namespace bellman
