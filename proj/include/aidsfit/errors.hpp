#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace aidsfit {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file layout problems: missing columns, unreadable header.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Values in an otherwise well-formed input violate a data invariant.
class DataError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public DataError {
public:
    using DataError::DataError;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class SpecificationError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

/// Restricted normal equations (or the restriction matrix) are rank deficient.
class IdentificationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A share used as a denominator is too close to zero.
class DegenerateShareError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class GenerationError : public Error {
public:
    using Error::Error;
};

/// Iterative procedure hit its iteration cap. Carries the per-iteration
/// max-abs coefficient change.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> trace)
        : Error(what), trace_(std::move(trace)) {}

    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

}  // namespace aidsfit
