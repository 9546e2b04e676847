#pragma once

#include <stdexcept>
#include <string>

namespace fmdp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A state assignment has the wrong length or a component out of range.
class InvalidStateError : public Error {
public:
    using Error::Error;
};

/// Structural problem with a model (mismatched scopes, table sizes, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

/// A basis function is identically zero on the sample, or the sample is empty.
class DegenerateBasisError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Planner residual blew up, or the iteration cap was hit when convergence was required.
class NonConvergenceError : public Error {
public:
    using Error::Error;
};

class OracleTooLargeError : public Error {
public:
    using Error::Error;
};

/// A documented precondition (e.g. ||HG|| <= 1) does not hold.
class ContractError : public Error {
public:
    using Error::Error;
};

/// Argument of a logarithm in a theory constant is <= 1.
class FormulaDomainError : public Error {
public:
    using Error::Error;
};

} // namespace fmdp
