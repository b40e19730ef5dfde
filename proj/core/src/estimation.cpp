#include "bellman/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bellman {

double to_natural(ParamTransform t, double u) {
    switch (t) {
        case ParamTransform::Identity: return u;
        case ParamTransform::Log: return std::exp(u);
        case ParamTransform::LogisticSigned: return 2.0 / (1.0 + std::exp(-u)) - 1.0;
    }
    throw InvalidModel("unknown parameter transform");
}

double to_unconstrained(ParamTransform t, double v) {
    switch (t) {
        case ParamTransform::Identity: return v;
        case ParamTransform::Log:
            if (!(v > 0.0)) throw InvalidModel("log transform needs a positive value");
            return std::log(v);
        case ParamTransform::LogisticSigned:
            if (!(v > -1.0 && v < 1.0))
                throw InvalidModel("logistic transform needs a value in (-1, 1)");
            return std::log((1.0 + v) / (1.0 - v));
    }
    throw InvalidModel("unknown parameter transform");
}

namespace {

void write_slot(ModelSpec& spec, const ParamSlot& slot, double value) {
    auto set_matrix = [&](Matrix& m, bool symmetric) {
        if (slot.row >= m.rows() || slot.col >= m.cols() || slot.row < 0 || slot.col < 0)
            throw InvalidModel("parameter slot indices out of range");
        m(slot.row, slot.col) = value;
        if (symmetric) m(slot.col, slot.row) = value;
    };
    auto set_vector = [&](Vector& v) {
        if (slot.row >= v.size() || slot.row < 0)
            throw InvalidModel("parameter slot index out of range");
        v(slot.row) = value;
    };
    switch (slot.target) {
        case ParamSlot::Target::C: set_vector(spec.c); break;
        case ParamSlot::Target::T: set_matrix(spec.T, false); break;
        case ParamSlot::Target::R: set_matrix(spec.R, false); break;
        case ParamSlot::Target::Q: set_matrix(spec.Q, true); break;
        case ParamSlot::Target::ObsIntercept: set_vector(spec.obs_intercept); break;
        case ParamSlot::Target::ObsLoading: set_matrix(spec.obs_loading, false); break;
        case ParamSlot::Target::ObsNoise: set_matrix(spec.obs_noise, true); break;
    }
}

}  // namespace

ModelSpec apply_params(const ModelSpec& base, const std::vector<ParamSpec>& params,
                       const Vector& natural_values) {
    if (natural_values.size() != static_cast<Eigen::Index>(params.size()))
        throw DimensionMismatch("apply_params: value count does not match the parameter list");
    ModelSpec spec = base;
    for (std::size_t i = 0; i < params.size(); ++i)
        write_slot(spec, params[i].slot, natural_values(static_cast<int>(i)));
    return spec;
}

double objective(const Vector& psi_unconstrained, const EstimationProblem& prob,
                 std::string* diagnostic) {
    if (psi_unconstrained.size() != static_cast<Eigen::Index>(prob.params.size()))
        throw DimensionMismatch("objective: psi length does not match param_spec");
    try {
        Vector natural(psi_unconstrained.size());
        for (std::size_t i = 0; i < prob.params.size(); ++i)
            natural(static_cast<int>(i)) =
                to_natural(prob.params[i].transform, psi_unconstrained(static_cast<int>(i)));
        const ModelSpec spec = apply_params(prob.base, prob.params, natural);
        const StateTransition trans = build_transition(spec);
        const auto model = build_observation(spec);
        return run_filter(prob.data, trans, *model, prob.filter_cfg).objective;
    } catch (const Error& e) {
        if (diagnostic != nullptr) *diagnostic = e.what();
        return kObjectiveSentinel;
    }
}

SimplexResult nelder_mead_maximize(const std::function<double(const Vector&)>& f,
                                   const Vector& x0, double tol, int max_evals) {
    const int dim = static_cast<int>(x0.size());
    SimplexResult result;
    result.x = x0;

    int evals = 0;
    auto eval = [&](const Vector& x) {
        ++evals;
        const double v = f(x);
        if (v > result.value || evals == 1) {
            result.value = v;
            result.x = x;
        }
        return v;
    };

    if (dim == 0) {
        result.value = eval(x0);
        result.evals = evals;
        result.converged = true;
        return result;
    }

    std::vector<Vector> vertex(dim + 1, x0);
    std::vector<double> value(dim + 1);
    for (int i = 0; i < dim; ++i) vertex[i + 1](i) += 0.25;
    for (int i = 0; i <= dim; ++i) {
        if (evals >= max_evals) {  // budget too small to even build the simplex
            result.evals = evals;
            return result;
        }
        value[i] = eval(vertex[i]);
    }

    std::vector<int> order(dim + 1);
    while (evals < max_evals) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return value[a] > value[b]; });
        const int best = order[0], worst = order[dim], second_worst = order[dim - 1];
        if (value[best] - value[worst] < tol) {
            result.converged = true;
            break;
        }

        Vector centroid = Vector::Zero(dim);
        for (int i = 0; i <= dim; ++i)
            if (i != worst) centroid += vertex[i];
        centroid /= dim;

        const Vector reflected = centroid + (centroid - vertex[worst]);
        const double f_reflected = eval(reflected);
        if (f_reflected > value[best]) {
            const Vector expanded = centroid + 2.0 * (centroid - vertex[worst]);
            const double f_expanded = eval(expanded);
            if (f_expanded > f_reflected) {
                vertex[worst] = expanded;
                value[worst] = f_expanded;
            } else {
                vertex[worst] = reflected;
                value[worst] = f_reflected;
            }
        } else if (f_reflected > value[second_worst]) {
            vertex[worst] = reflected;
            value[worst] = f_reflected;
        } else {
            const bool outside = f_reflected > value[worst];
            const Vector contracted =
                outside ? Vector(centroid + 0.5 * (reflected - centroid))
                        : Vector(centroid + 0.5 * (vertex[worst] - centroid));
            const double f_contracted = eval(contracted);
            if (f_contracted > (outside ? f_reflected : value[worst])) {
                vertex[worst] = contracted;
                value[worst] = f_contracted;
            } else {
                // Shrink toward the best vertex.
                for (int i = 0; i <= dim; ++i) {
                    if (i == best) continue;
                    vertex[i] = vertex[best] + 0.5 * (vertex[i] - vertex[best]);
                    value[i] = eval(vertex[i]);
                }
            }
        }
    }

    result.evals = evals;
    return result;
}

EstimationResult estimate(const EstimationProblem& prob) {
    const int dim = static_cast<int>(prob.params.size());
    if (dim > 20)
        throw InvalidModel("estimation supports at most 20 hyperparameters, got " +
                           std::to_string(dim));

    Vector psi0(dim);
    for (int i = 0; i < dim; ++i)
        psi0(i) = to_unconstrained(prob.params[i].transform, prob.params[i].init);

    const SimplexResult sr = nelder_mead_maximize(
        [&](const Vector& psi) { return objective(psi, prob); }, psi0, prob.optimizer.tol,
        prob.optimizer.max_evals);

    EstimationResult result;
    result.psi_hat = Vector(dim);
    for (int i = 0; i < dim; ++i)
        result.psi_hat(i) = to_natural(prob.params[i].transform, sr.x(i));
    result.objective = sr.value;
    result.evals = sr.evals;
    result.converged = sr.converged;

    // Rerun at the optimum for the per-step terms; also a reproducibility check.
    try {
        const ModelSpec spec = apply_params(prob.base, prob.params, result.psi_hat);
        const StateTransition trans = build_transition(spec);
        const auto model = build_observation(spec);
        const FilterOutput out = run_filter(prob.data, trans, *model, prob.filter_cfg);
        result.per_t_terms.reserve(out.steps.size());
        for (const FilterStep& s : out.steps) result.per_t_terms.push_back(s.ll_term);
    } catch (const Error&) {
        // Optimum sits on a failing configuration (possible when every
        // evaluation hit the sentinel); leave per-step terms empty.
    }
    return result;
}

}  // namespace bellman
