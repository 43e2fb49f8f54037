#pragma once

#include <stdexcept>
#include <string>

namespace katolab {

// Evaluation requested within the guard distance of a pole of the analytic
// continuation (or beyond the strip where the continuation is defined).
struct pole_proximity_error : std::domain_error {
    using std::domain_error::domain_error;
};

// A quadrature or transform was asked to trust samples that do not decay at
// the grid boundary; the result would be dominated by domain truncation.
struct truncation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A tail fit failed its quality gate; the estimate it produced is not usable.
struct unreliable_fit_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structural contract violation on numerical input, e.g. a matrix handed to
// the Hermitian eigensolver whose Hermiticity defect exceeds tolerance.
struct integrity_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid experiment configuration (bad JSON, unknown key, bad value).
// The command line maps this to exit code 2.
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace katolab
