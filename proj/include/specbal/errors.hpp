#pragma once

#include <stdexcept>
#include <string>

namespace specbal {

// Malformed or non-finite user input (matrix files, dimensions).
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A configuration value outside its admissible range (R <= 1, c0 not in (0,1), ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerically rank-deficient or non-positive-definite operand.
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The problem violates the feasibility hypothesis, or a constraint system
// that should have a kernel does not.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Signal: the current point already meets the balance target, so the
// descent machinery has nothing to do.
struct AlreadyBalanced : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A property that is guaranteed to hold failed; message carries diagnostics.
struct InternalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace specbal
