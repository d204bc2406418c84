// errors.hpp
// Exception types thrown by the ktcs library.

#pragma once

#include <stdexcept>
#include <string>

namespace ktcs {

// Base class so callers can catch everything from this library at once.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user-supplied parameters (rejected before any computation).
struct ValidationError : Error {
    using Error::Error;
};

// A state cannot be normalized (zero-norm chain, e.g. xi = 0 with j > 0).
struct NonNormalizable : Error {
    using Error::Error;
};

// Requested truncation leaves too much probability in the dropped tail.
struct TruncationTooSmall : Error {
    using Error::Error;
};

struct IndexOutOfRange : Error {
    using Error::Error;
};

// Inputs violate an algebraic side condition (e.g. alpha*beta*gamma != xi).
struct ConstraintViolated : Error {
    using Error::Error;
};

// A mean occupation underflowed; the Mandel ratio is undefined there.
struct DegenerateMean : Error {
    using Error::Error;
};

// Root bracketing failed: the function does not change sign on the interval.
struct NoSignChange : Error {
    using Error::Error;
};

struct DomainError : Error {
    using Error::Error;
};

struct QuadratureNotConverged : Error {
    using Error::Error;
};

// A reconstructed moment disagrees with its factorial target.
struct MomentMismatch : Error {
    using Error::Error;
};

struct ResolutionTooCoarse : Error {
    using Error::Error;
};

// Integrator step too large: trace drift or jump probability out of bounds.
struct StepTooLarge : Error {
    using Error::Error;
};

}  // namespace ktcs
