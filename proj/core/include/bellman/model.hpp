#pragma once

#include <functional>
#include <memory>

#include "bellman/linalg.hpp"
#include "bellman/random.hpp"

namespace bellman {

/// Linear-Gaussian state dynamics x_t = c + T x_{t-1} + R eta_t with
/// eta_t ~ N(0, Q). Matrices are static over time.
struct StateTransition {
    Vector c;
    Matrix T;
    Matrix R;
    SymMatrix Q;

    StateTransition(Vector c_in, Matrix T_in, Matrix R_in, const Matrix& Q_in);

    int state_dim() const { return static_cast<int>(c.size()); }
    int noise_dim() const { return Q.dim(); }
};

/// Conditional observation density p(y | x). Implementations must be
/// immutable after construction; all evaluation methods are pure and safe to
/// call concurrently.
class ObservationModel {
public:
    virtual ~ObservationModel() = default;

    virtual int obs_dim() const = 0;
    virtual int state_dim() const = 0;

    /// Exact log p(y|x), normalizing constants included.
    virtual double log_density(const Vector& y, const Vector& x) const = 0;
    /// Gradient of log_density in x.
    virtual Vector score(const Vector& y, const Vector& x) const = 0;
    /// -d^2/dx dx' log p(y|x).
    virtual SymMatrix neg_hessian(const Vector& y, const Vector& x) const = 0;
    /// Expected negative Hessian over y ~ p(.|x), in closed form.
    virtual SymMatrix fisher(const Vector& x) const = 0;
    /// Draw y ~ p(.|x).
    virtual Vector sample(Rng& rng, const Vector& x) const = 0;
    /// Throws InvalidObservation when y is outside the model's support.
    virtual void validate(const Vector& y) const;
};

/// y = d + Z x + eps, eps ~ N(0, H). Score is linear in x, so the negative
/// Hessian is constant and equals the Fisher information Z' H^{-1} Z.
class GaussianObservation final : public ObservationModel {
public:
    GaussianObservation(Vector d, Matrix Z, const Matrix& H);

    int obs_dim() const override { return static_cast<int>(d_.size()); }
    int state_dim() const override { return static_cast<int>(Z_.cols()); }
    double log_density(const Vector& y, const Vector& x) const override;
    Vector score(const Vector& y, const Vector& x) const override;
    SymMatrix neg_hessian(const Vector& y, const Vector& x) const override;
    SymMatrix fisher(const Vector& x) const override;
    Vector sample(Rng& rng, const Vector& x) const override;

    const Vector& intercept() const { return d_; }
    const Matrix& loading() const { return Z_; }
    const PDMatrix& noise() const { return H_; }

private:
    Vector d_;
    Matrix Z_;
    PDMatrix H_;
    SymMatrix info_;       // Z' H^{-1} Z
    double log_norm_;      // -(k/2) log(2 pi) - (1/2) log det H
};

/// Independent counts y_i ~ Poisson(exp(delta_i + z_i' x)). The log link
/// makes the realized Hessian free of y, hence equal to the Fisher
/// information.
class PoissonObservation final : public ObservationModel {
public:
    PoissonObservation(Vector delta, Matrix Z);

    int obs_dim() const override { return static_cast<int>(delta_.size()); }
    int state_dim() const override { return static_cast<int>(Z_.cols()); }
    double log_density(const Vector& y, const Vector& x) const override;
    Vector score(const Vector& y, const Vector& x) const override;
    SymMatrix neg_hessian(const Vector& y, const Vector& x) const override;
    SymMatrix fisher(const Vector& x) const override;
    Vector sample(Rng& rng, const Vector& x) const override;
    void validate(const Vector& y) const override;

private:
    Vector intensities(const Vector& x) const;
    Vector delta_;
    Matrix Z_;
};

/// Independent binary y_i with logit link: P(y_i = 1) = logistic(delta_i + z_i' x).
class BernoulliObservation final : public ObservationModel {
public:
    BernoulliObservation(Vector delta, Matrix Z);

    int obs_dim() const override { return static_cast<int>(delta_.size()); }
    int state_dim() const override { return static_cast<int>(Z_.cols()); }
    double log_density(const Vector& y, const Vector& x) const override;
    Vector score(const Vector& y, const Vector& x) const override;
    SymMatrix neg_hessian(const Vector& y, const Vector& x) const override;
    SymMatrix fisher(const Vector& x) const override;
    Vector sample(Rng& rng, const Vector& x) const override;
    void validate(const Vector& y) const override;

private:
    Vector probabilities(const Vector& x) const;
    Vector delta_;
    Matrix Z_;
};

/// y = d + Z(x) + eps with a smooth nonlinear map Z and Gaussian noise.
/// The caller supplies the Jacobian of Z; neg_hessian ignores second-order
/// derivatives of Z (Gauss-Newton curvature), which coincides with the
/// Fisher information J' H^{-1} J.
class NonlinearGaussianObservation final : public ObservationModel {
public:
    using Map = std::function<Vector(const Vector&)>;
    using Jacobian = std::function<Matrix(const Vector&)>;

    NonlinearGaussianObservation(Vector d, Map fn, Jacobian jac, const Matrix& H,
                                 int state_dim);

    int obs_dim() const override { return static_cast<int>(d_.size()); }
    int state_dim() const override { return state_dim_; }
    double log_density(const Vector& y, const Vector& x) const override;
    Vector score(const Vector& y, const Vector& x) const override;
    SymMatrix neg_hessian(const Vector& y, const Vector& x) const override;
    SymMatrix fisher(const Vector& x) const override;
    Vector sample(Rng& rng, const Vector& x) const override;

    Vector map(const Vector& x) const { return fn_(x); }
    Matrix jacobian(const Vector& x) const { return jac_(x); }
    const Vector& intercept() const { return d_; }
    const PDMatrix& noise() const { return H_; }

    /// Compares the supplied Jacobian against central finite differences of
    /// the map at x. Hand-coded Jacobians are easy to get wrong; run this at
    /// a few representative states before trusting filter output.
    bool jacobian_matches_fd(const Vector& x, double rel_tol = 1e-5) const;

private:
    Vector d_;
    Map fn_;
    Jacobian jac_;
    PDMatrix H_;
    int state_dim_;
    double log_norm_;
};

/// Gaussian location density with a cosine ripple on the residual:
/// log p(y|x) = -u^2/2 + a cos(u) - log c(a), u = y - delta - z'x per series.
/// Deliberately not log-concave: the realized information 1 + a cos(u) turns
/// negative on part of the support while the Fisher information stays
/// positive. Used by the check suite to exercise non-concave behaviour.
class RippleObservation final : public ObservationModel {
public:
    RippleObservation(Vector delta, Matrix Z, double amplitude = 2.0);

    int obs_dim() const override { return static_cast<int>(delta_.size()); }
    int state_dim() const override { return static_cast<int>(Z_.cols()); }
    double log_density(const Vector& y, const Vector& x) const override;
    Vector score(const Vector& y, const Vector& x) const override;
    SymMatrix neg_hessian(const Vector& y, const Vector& x) const override;
    SymMatrix fisher(const Vector& x) const override;
    Vector sample(Rng& rng, const Vector& x) const override;

    double amplitude() const { return amplitude_; }

private:
    Vector delta_;
    Matrix Z_;
    double amplitude_;
    double log_norm_;   // log of the normalizing constant per series
    double mean_cos_;   // E[cos u] under the ripple density
};

enum class ObservationKind { Gaussian, Poisson, Bernoulli, NonconcaveStub };

/// Plain-data description of a model, sufficient to rebuild the transition
/// and observation objects. This is the form hyperparameters are written
/// into during estimation and the form the JSON config parses to.
struct ModelSpec {
    Vector c;
    Matrix T;
    Matrix R;
    Matrix Q;

    ObservationKind kind = ObservationKind::Gaussian;
    Vector obs_intercept;          // d for Gaussian, delta otherwise
    Matrix obs_loading;            // Z
    Matrix obs_noise;              // H, Gaussian/stub-free kinds ignore it
    double ripple_amplitude = 2.0;

    int state_dim() const { return static_cast<int>(c.size()); }
};

StateTransition build_transition(const ModelSpec& spec);
std::unique_ptr<ObservationModel> build_observation(const ModelSpec& spec);

}  // namespace bellman
