#pragma once

#include <vector>

#include "bellman/filter.hpp"

namespace bellman {

/// Smoothed moments at one time point. Stored symmetric rather than
/// positive-definite: the backward recursion guarantees PSD only.
struct SmootherStep {
    int t = 0;
    Vector x_smooth;
    SymMatrix P_smooth;
};

/// One backward step: with gain G = P_filt T' P_pred_next^{-1} (obtained by
/// solve, never an explicit inverse),
///   x_smooth = x_filt + G (x_smooth_next - x_pred_next)
///   P_smooth = P_filt - G (P_pred_next - P_smooth_next) G'.
SmootherStep rts_step(const FilterStep& filt, const Vector& x_pred_next,
                      const PDMatrix& P_pred_next, const SmootherStep& next,
                      const StateTransition& trans);

/// Backward pass over a filter output, initialised at t = n with the
/// filtered moments. Pure function; rerunning on the same input reproduces
/// the output exactly.
std::vector<SmootherStep> run_smoother(const FilterOutput& filt, const StateTransition& trans);

}  // namespace bellman
