#pragma once

#include <string>
#include <vector>

#include "bellman/config.hpp"

namespace bellman {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;  // empty on success
};

/// Built-in invariant suite: matrix-lemma identities, factorization
/// round-trips, gradient consistency of the configured observation model,
/// positive-definiteness of the configured information matrix, filter
/// invariants on simulated data, and (for Gaussian models) agreement of the
/// optimization path with the closed form and of the filter objective with
/// the exact likelihood.
std::vector<CheckResult> run_checks(const RunConfig& cfg);

}  // namespace bellman
