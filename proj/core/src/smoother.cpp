#include "bellman/smoother.hpp"

namespace bellman {

SmootherStep rts_step(const FilterStep& filt, const Vector& x_pred_next,
                      const PDMatrix& P_pred_next, const SmootherStep& next,
                      const StateTransition& trans) {
    const int d = trans.state_dim();
    if (filt.x_filt.size() != d || x_pred_next.size() != d || next.x_smooth.size() != d)
        throw DimensionMismatch("rts_step: state dimension mismatch");

    // G' solves P_pred_next G' = T P_filt.
    const Matrix G = P_pred_next.solve(Matrix(trans.T * filt.P_filt.mat())).transpose();

    SmootherStep out;
    out.t = filt.t;
    out.x_smooth = filt.x_filt + G * (next.x_smooth - x_pred_next);
    out.P_smooth = SymMatrix(filt.P_filt.mat() -
                             G * (P_pred_next.mat() - next.P_smooth.mat()) * G.transpose());
    return out;
}

std::vector<SmootherStep> run_smoother(const FilterOutput& filt, const StateTransition& trans) {
    if (filt.steps.empty()) throw EmptyFilterOutput("run_smoother: filter output is empty");

    const std::size_t n = filt.steps.size();
    std::vector<SmootherStep> out(n);
    const FilterStep& last = filt.steps.back();
    out[n - 1] = {last.t, last.x_filt, last.P_filt.sym()};
    for (std::size_t i = n - 1; i-- > 0;) {
        const FilterStep& next_filt = filt.steps[i + 1];
        out[i] = rts_step(filt.steps[i], next_filt.x_pred, next_filt.P_pred, out[i + 1], trans);
    }
    return out;
}

}  // namespace bellman
