#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ehpa {

/// Argument outside the mathematical domain of an operation (negative battery, h < 0, ...).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Precondition or structural invariant violated by the caller.
struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

/// Non-finite values or failed numerical procedures.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent configuration / input files.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Value iteration did not reach the requested tolerance.
struct ConvergenceError : NumericError {
    ConvergenceError(const std::string& what, std::vector<double> trace_)
        : NumericError(what), trace(std::move(trace_)) {}
    std::vector<double> trace;
};

}  // namespace ehpa
