#pragma once

#include <stdexcept>
#include <string>

namespace qmamis {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Requested Sobol' dimension exceeds the shipped direction-number table.
class UnsupportedDimension : public Error {
public:
    using Error::Error;
};

/// A parameter vector holds non-finite entries.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Covariance block cannot be factorized, even after repair.
class SingularProposal : public Error {
public:
    using Error::Error;
};

/// Self-normalized weights of a stage are all zero or non-finite.
class DegenerateWeights : public Error {
public:
    using Error::Error;
};

class IngestionError : public Error {
public:
    using Error::Error;
};

class EstimateError : public Error {
public:
    using Error::Error;
};

class RunError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

#define QMAMIS_REQUIRE(cond, ErrType, msg)                                     \
    do {                                                                       \
        if (!(cond)) throw ::qmamis::ErrType(msg);                             \
    } while (false)

} // namespace qmamis
