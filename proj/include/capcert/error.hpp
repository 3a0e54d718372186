#pragma once

#include <stdexcept>
#include <string>

namespace capcert {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes of two operands do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A value violates a documented invariant (negative mass, bad row sum, ...).
class InvariantError : public Error {
public:
    using Error::Error;
};

/// Support condition violated, e.g. D(p||q) = +inf.
class SupportError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of a function (pole of the envelope, p in Pi, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An empty feasible set: infeasible constraints, empty Pi description, ...
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Iterative solver failed to reach its tolerance or hit a numerical breakdown.
class SolverError : public Error {
public:
    using Error::Error;
};

/// No valid directions exist (Pi equals the feasible polytope); the
/// quadratic-decay statement is vacuous.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// Certificate construction failed (nonpositive alpha, unreachable neighbourhood).
class CertificateError : public Error {
public:
    using Error::Error;
};

/// Malformed channel file.
class ParseError : public Error {
public:
    using Error::Error;
};

}  // namespace capcert
