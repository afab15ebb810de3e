#pragma once

#include <stdexcept>
#include <string>

namespace asicval {

// Argument outside an operation's domain (negative turn, k > t, P <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Model parameters that violate the no-arbitrage ordering or a schema rule.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Up and down factors coincide, so no hedge ratio exists.
class DegenerateLatticeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Calibration cannot produce usable factors (e.g. zero volatility).
class CalibrationError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Malformed or insufficient market data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace asicval
