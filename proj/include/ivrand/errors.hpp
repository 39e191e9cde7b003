#pragma once

#include <stdexcept>
#include <string>

namespace ivrand {

// Estimation failures that callers are expected to branch on.
class EstimatorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// cov(Z, X) is exactly zero: the instrument carries no compliance signal.
class DegenerateInstrumentError : public EstimatorError {
public:
    using EstimatorError::EstimatorError;
};

// An estimator's defining contrast does not exist (e.g. an empty suggestion group).
class UndefinedEstimatorError : public EstimatorError {
public:
    using EstimatorError::EstimatorError;
};

// The residualizing regression is singular (constant covariate).
class DegenerateRegressionError : public EstimatorError {
public:
    using EstimatorError::EstimatorError;
};

// Test inversion is impossible (K = 0, so no beta maps onto the ITT scale).
class CannotInvertError : public EstimatorError {
public:
    using EstimatorError::EstimatorError;
};

// A p-value profile lies entirely at or below the requested alpha.
class EmptyIntervalError : public EstimatorError {
public:
    using EstimatorError::EstimatorError;
};

// Malformed configuration input (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed data file input (CLI exit code 3).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ivrand
