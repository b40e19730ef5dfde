#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bellman/filter.hpp"

namespace bellman {

/// Maps between the optimizer's unconstrained space and the natural
/// parameter domain. Log keeps variances positive; LogisticSigned keeps
/// persistence-type entries inside (-1, 1).
enum class ParamTransform { Identity, Log, LogisticSigned };

double to_natural(ParamTransform t, double unconstrained);
double to_unconstrained(ParamTransform t, double natural);

/// Where a hyperparameter lands in the model description.
struct ParamSlot {
    enum class Target { C, T, R, Q, ObsIntercept, ObsLoading, ObsNoise };
    Target target = Target::Q;
    int row = 0;
    int col = 0;
};

struct ParamSpec {
    std::string name;
    ParamTransform transform = ParamTransform::Identity;
    double init = 0.0;  // natural scale
    ParamSlot slot;
};

struct OptimizerSettings {
    int max_evals = 2000;
    double tol = 1e-8;  // simplex objective spread
};

struct EstimationProblem {
    std::vector<ParamSpec> params;
    std::vector<Vector> data;
    ModelSpec base;
    FilterConfig filter_cfg;
    OptimizerSettings optimizer;
};

struct EstimationResult {
    Vector psi_hat;             // natural scale, ordered like params
    double objective = 0.0;
    int evals = 0;
    bool converged = false;
    std::vector<double> per_t_terms;
};

/// Writes the natural-scale values into a copy of the base spec, one slot per
/// parameter. Symmetric targets (Q, H) mirror off-diagonal writes.
ModelSpec apply_params(const ModelSpec& base, const std::vector<ParamSpec>& params,
                       const Vector& natural_values);

/// Filter objective at an unconstrained parameter vector. Any model or
/// filter error is absorbed into a large negative sentinel so the outer
/// optimizer retreats; the message (with failing time index when available)
/// is placed in *diagnostic if given.
double objective(const Vector& psi_unconstrained, const EstimationProblem& prob,
                 std::string* diagnostic = nullptr);

constexpr double kObjectiveSentinel = -1e300;

struct SimplexResult {
    Vector x;
    double value = 0.0;
    int evals = 0;
    bool converged = false;
};

/// Nelder-Mead maximization with a fixed +0.25 initial perturbation per
/// coordinate. Deterministic; returns the best point seen regardless of
/// convergence. Exposed so reference objectives can be optimized with the
/// exact same procedure.
SimplexResult nelder_mead_maximize(const std::function<double(const Vector&)>& f,
                                   const Vector& x0, double tol, int max_evals);

/// Maximizes the filter objective over the hyperparameters.
EstimationResult estimate(const EstimationProblem& prob);

}  // namespace bellman
