#pragma once

#include <stdexcept>
#include <string>

namespace v2hg {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a model function.
struct DomainError : Error {
    using Error::Error;
};

// Malformed or inconsistent input data (CSV, parameter files, configs).
struct ValidationError : Error {
    using Error::Error;
};

struct ConfigError : ValidationError {
    using ValidationError::ValidationError;
};

struct SolverError : Error {
    using Error::Error;
};

struct SimulationFault : Error {
    using Error::Error;
};

} // namespace v2hg
