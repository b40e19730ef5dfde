#pragma once

#include <utility>
#include <vector>

#include "bellman/model.hpp"

namespace bellman {

enum class InformationMode { Fisher, Realized, Weighted };
enum class InnerOptimizer { Newton, QuasiNewton };

/// How run_filter picks the per-step update. Auto routes Gaussian
/// observations with Fisher information through the closed-form Kalman
/// update; ForceOptimizer always runs the mode search (used by the CLI's
/// --force-newton to demonstrate both paths agree).
enum class UpdatePath { Auto, ForceOptimizer };

struct FilterConfig {
    InformationMode info_mode = InformationMode::Fisher;
    double fisher_weight = 1.0;  // weight on Fisher when info_mode == Weighted
    InnerOptimizer optimizer = InnerOptimizer::Newton;
    double grad_tol = 1e-10;     // scaled by max(1, |objective at the prediction|)
    int max_iter = 100;
    Vector x0;
    PDMatrix P0;

    FilterConfig() = default;
    FilterConfig(Vector x0_in, PDMatrix P0_in) : x0(std::move(x0_in)), P0(std::move(P0_in)) {}
};

struct FilterStep {
    int t = 0;  // 1-based
    Vector x_pred;
    PDMatrix P_pred;
    Vector x_filt;
    PDMatrix P_filt;
    double ll_term = 0.0;
    int inner_iters = 0;
};

struct FilterOutput {
    std::vector<FilterStep> steps;
    double objective = 0.0;  // sum of ll_term over steps, in time order
};

/// One-step-ahead prediction: x = c + T x_prev, P = T P_prev T' + R Q R'.
std::pair<Vector, PDMatrix> predict(const Vector& x_prev, const PDMatrix& P_prev,
                                    const StateTransition& trans);

struct UpdateResult {
    Vector x_filt;
    PDMatrix P_filt;
    int inner_iters = 0;
};

/// Proximal mode update: maximizes log p(y|x) - (1/2)(x - x_pred)' P_pred^{-1}
/// (x - x_pred) from a warm start at the prediction, then sets
/// P_filt = [P_pred^{-1} + J]^{-1} with J chosen by cfg.info_mode. The
/// uncertainty update runs through a factored low-rank identity; no explicit
/// inverse is formed.
UpdateResult bellman_update(const Vector& y, const Vector& x_pred, const PDMatrix& P_pred,
                            const ObservationModel& model, const FilterConfig& cfg);

/// Closed-form Kalman update; factorizes only the obs x obs innovation matrix.
std::pair<Vector, PDMatrix> kalman_update(const Vector& y, const Vector& x_pred,
                                          const PDMatrix& P_pred,
                                          const GaussianObservation& model);

/// Gauss-Newton mode search for nonlinear-Gaussian observations, initialised
/// at the prediction. A single iteration is the extended Kalman filter
/// update; iterating to tolerance gives the iterated EKF.
UpdateResult gauss_newton_update(const Vector& y, const Vector& x_pred, const PDMatrix& P_pred,
                                 const NonlinearGaussianObservation& model,
                                 const FilterConfig& cfg);

/// Per-step term of the estimation objective:
/// log p(y|x_filt) - (1/2)[log det P_pred - log det P_filt]
///                 - (1/2)(x_filt - x_pred)' P_pred^{-1} (x_filt - x_pred).
double ll_contribution(const ObservationModel& model, const Vector& y, const Vector& x_pred,
                       const PDMatrix& P_pred, const Vector& x_filt, const PDMatrix& P_filt);

/// Full forward pass over the data. Any error is rethrown as FilterError
/// carrying the failing 1-based time index.
FilterOutput run_filter(const std::vector<Vector>& data, const StateTransition& trans,
                        const ObservationModel& model, const FilterConfig& cfg,
                        UpdatePath path = UpdatePath::Auto);

}  // namespace bellman
