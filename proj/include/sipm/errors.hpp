// Copyright (c) sipm contributors
// Licensed under Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace sipm {

/// A point left the interior of a cone (or was never inside it). The message
/// names the violated cone block.
class ConeDomainError : public std::domain_error {
public:
    explicit ConeDomainError(const std::string& what) : std::domain_error(what) {}
};

/// A vector or matrix has the wrong dimensions for the requested operation.
class DimensionError : public std::invalid_argument {
public:
    explicit DimensionError(const std::string& what) : std::invalid_argument(what) {}
};

/// A quantity that must be nonnegative (e.g. a barrier quadratic form) came
/// out negative beyond rounding tolerance. Signals a broken implementation,
/// not bad user input.
class InternalConsistencyError : public std::logic_error {
public:
    explicit InternalConsistencyError(const std::string& what) : std::logic_error(what) {}
};

/// The constraint system A H A^T is numerically singular.
class IllPosedConstraintsError : public std::runtime_error {
public:
    explicit IllPosedConstraintsError(const std::string& what) : std::runtime_error(what) {}
};

/// A mathematical invariant of the method was violated at runtime (e.g. an
/// extrapolated point left the feasible region, or an iterate left the cone
/// interior). Indicates a fault, since exact arithmetic rules these out.
class InvariantViolation : public std::logic_error {
public:
    explicit InvariantViolation(const std::string& what) : std::logic_error(what) {}
};

/// Invalid run configuration: bad hyperparameters, infeasible initial point.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sipm
