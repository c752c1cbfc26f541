#pragma once

#include <stdexcept>
#include <string>

namespace almabdc {

/// Caller passed arguments violating an operation's preconditions.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Configuration file or experiment description is invalid. CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure (factorization breakdown, degenerate fit). CLI exit code 3.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem failure. CLI exit code 4.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace almabdc
