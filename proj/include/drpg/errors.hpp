#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace drpg {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value violates a type invariant (non-stochastic row, bad shape, ...).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// A scalar argument is out of its admissible range.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Incompatible combination of solver options.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// The requested operation is not available for this ambiguity kind.
class UnsupportedKind : public Error {
public:
    using Error::Error;
};

/// Query outside the domain of a function (e.g. a score off the support).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Should never happen given the invariants of the inputs.
class InternalError : public Error {
public:
    using Error::Error;
};

/// An iterative method stopped before reaching its tolerance.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double residual, std::size_t iterations,
                     std::vector<double> last_iterate = {})
        : Error(what + " (residual " + std::to_string(residual) + " after " +
                std::to_string(iterations) + " iterations)"),
          residual_(residual), iterations_(iterations), last_iterate_(std::move(last_iterate)) {}

    double residual() const noexcept { return residual_; }
    std::size_t iterations() const noexcept { return iterations_; }
    const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

private:
    double residual_;
    std::size_t iterations_;
    std::vector<double> last_iterate_;
};

class LpInfeasible : public Error {
public:
    using Error::Error;
};

class LpUnbounded : public Error {
public:
    using Error::Error;
};

} // namespace drpg
