#pragma once

#include <stdexcept>
#include <string>

namespace kolmo {

// Argument outside the admissible domain of an operation (x <= 0 in the
// L-geometry, r <= 0 for a dilation, inadmissible control endpoints, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A numerical procedure could not reach its tolerance or was refused up
// front because the regime is known to be unreliable.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Two grid functions (or a grid and a spec) have incompatible shapes.
class GridMismatch : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Coefficients or payoffs that break their declared bounds.
class BoundViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Stability constraint of the explicit transport step is not satisfied.
class CflViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Payoff growth exceeds what the representation formula supports.
class GrowthViolation : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The kernel evaluator supplies no envelope, so the quadrature window cannot
// be bounded.
class EnvelopeUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed configuration or command line; the message names the key.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw DomainError(what);
}

}  // namespace detail
}  // namespace kolmo
