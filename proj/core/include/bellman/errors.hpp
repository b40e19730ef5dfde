#pragma once

#include <stdexcept>
#include <string>

namespace bellman {

/// Base class for all recoverable errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Cholesky pivot fell below tolerance. Carries the failing pivot.
class NotPositiveDefinite : public Error {
public:
    NotPositiveDefinite(int pivot_index, double pivot_value)
        : Error("matrix not positive definite: pivot " + std::to_string(pivot_index) +
                " = " + std::to_string(pivot_value)),
          pivot_index(pivot_index),
          pivot_value(pivot_value) {}
    int pivot_index;
    double pivot_value;
};

class InvalidModel : public Error {
public:
    using Error::Error;
};

class InvalidObservation : public Error {
public:
    using Error::Error;
};

/// Inner mode search hit max_iter before the gradient tolerance.
class NoConvergence : public Error {
public:
    NoConvergence(int iterations, double grad_norm)
        : Error("mode search did not converge after " + std::to_string(iterations) +
                " iterations (gradient norm " + std::to_string(grad_norm) + ")"),
          iterations(iterations),
          grad_norm(grad_norm) {}
    int iterations;
    double grad_norm;
};

class ModeAtBoundary : public Error {
public:
    using Error::Error;
};

class WeightCollapse : public Error {
public:
    explicit WeightCollapse(int time_index)
        : Error("all particle weights underflowed at t = " + std::to_string(time_index)),
          time_index(time_index) {}
    int time_index;
};

class EmptyFilterOutput : public Error {
public:
    using Error::Error;
};

/// Wraps any error raised while filtering, tagged with the failing time index.
class FilterError : public Error {
public:
    FilterError(int time_index, const std::string& what)
        : Error("filter failed at t = " + std::to_string(time_index) + ": " + what),
          time_index(time_index) {}
    int time_index;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace bellman
