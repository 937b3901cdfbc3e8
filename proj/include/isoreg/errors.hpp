#pragma once

#include <stdexcept>

namespace isoreg {

// Bad argument to a library call: dimension mismatch, out-of-range query, etc.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Scenario file cannot be parsed or fails schema validation.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The feasible set of plans is empty, or a search found no feasible candidate.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An explicit scheme would run outside its stability bound; refuse to run.
struct StabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Closed-form expressions were requested outside their validity regime.
struct RegimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A run completed but failed a built-in self check (e.g. clamped-path budget).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace isoreg
