#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace crestwave {

// Base of every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the documented domain of an operation.
struct DomainError : Error {
    using Error::Error;
};

// Sampled quantity changes sign (or vanishes) on a log-linear fit window.
struct SignChangeError : DomainError {
    using DomainError::DomainError;
};

// Denominator below the guard threshold in a closed-form relation.
struct SingularityError : Error {
    using Error::Error;
};

// Root bracket without sign change; indicates a programming error.
struct BracketError : Error {
    using Error::Error;
};

// A documented invariant of a result record does not hold.
struct InvariantError : Error {
    using Error::Error;
};

// Iterative solve stopped without meeting its tolerance; carries residual and damping history.
struct ConvergenceError : Error {
    explicit ConvergenceError(const std::string& what, std::vector<double> residuals = {},
                              std::vector<double> steps = {})
        : Error(what), residual_history(std::move(residuals)), step_history(std::move(steps)) {}

    double last_residual() const { return residual_history.empty() ? 0.0 : residual_history.back(); }

    std::vector<double> residual_history;
    std::vector<double> step_history;
};

// Malformed run configuration: unknown key, bad value or missing file.
struct UsageError : Error {
    using Error::Error;
};

// Least-squares or linear system without full rank.
struct RankError : Error {
    using Error::Error;
};

} // namespace crestwave
