#pragma once

#include <cstdint>
#include <vector>

#include "bellman/filter.hpp"

namespace bellman::oracle {

/// Desk-scale reference implementations used to validate the filter,
/// smoother and estimator. These deliberately take independent computational
/// routes (dense joint distributions, grids, particles, Eigen's own
/// factorizations) from the production code paths they check.

struct SimulationRun {
    std::uint64_t seed = 0;
    std::vector<Vector> states;        // x_t, t = 1..n
    std::vector<Vector> observations;  // y_t
    std::vector<Vector> eta_draws;     // eta_t, replayable through the transition
};

/// Draws a full path from the model. Deterministic given the seed; per step
/// the state noise is drawn before the observation.
SimulationRun simulate(const StateTransition& trans, const ObservationModel& model, int n,
                       const Vector& x0_true, std::uint64_t seed);

/// Prediction-error decomposition of the exact linear-Gaussian likelihood,
/// computed with the closed-form recursion and Eigen's LLT only.
double exact_kalman_loglik(const std::vector<Vector>& data, const StateTransition& trans,
                           const GaussianObservation& model, const FilterConfig& cfg);

struct GridBounds {
    Vector lo;
    Vector hi;
};

/// Brute-force argmax of the proximal objective over a uniform grid with one
/// refinement pass (state dimension 1 or 2 only). Throws ModeAtBoundary when
/// the coarse-grid maximum sits on the boundary.
Vector grid_mode_search(const Vector& y, const Vector& x_pred, const PDMatrix& P_pred,
                        const ObservationModel& model, const GridBounds& bounds,
                        double resolution = 1e-4);

struct SmoothedMarginal {
    Vector mean;
    SymMatrix cov;
};

/// Builds the dense joint Gaussian of all states and observations implied by
/// a linear-Gaussian model and conditions on the data analytically. Intended
/// for n <= 6 and state dimension <= 3.
std::vector<SmoothedMarginal> exact_joint_smoother(const std::vector<Vector>& data,
                                                   const StateTransition& trans,
                                                   const GaussianObservation& model,
                                                   const FilterConfig& cfg);

struct ParticleSummary {
    Vector mean;
    Vector var;  // per-coordinate filtered variance
};

/// Bootstrap particle filter: propagate through the transition, weight by the
/// observation density, systematic resampling every step. Particles are
/// initialised from N(cfg.x0, cfg.P0). Deterministic given the seed.
std::vector<ParticleSummary> bootstrap_particle_filter(const std::vector<Vector>& data,
                                                       const StateTransition& trans,
                                                       const ObservationModel& model,
                                                       int n_particles, std::uint64_t seed,
                                                       const FilterConfig& cfg);

}  // namespace bellman::oracle
