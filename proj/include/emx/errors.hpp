#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace emx {

/// Base of every error raised by the library. `kind()` is a stable
/// machine-readable tag used in NDJSON error rows.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class InvalidState : public Error {
public:
    explicit InvalidState(const std::string& what) : Error("InvalidState", what) {}
};

class NonZeroMean : public Error {
public:
    NonZeroMean(double mean, double tol);
    double mean;
    double tol;
};

class InvalidDoping : public Error {
public:
    explicit InvalidDoping(double min_b);
    double min_b;
};

class NoConvergence : public Error {
public:
    NoConvergence(int iterations, double residual, const std::string& why = {});
    int iterations;
    double residual;
};

class PositivityViolation : public Error {
public:
    PositivityViolation(std::string field, std::size_t index, double value, double floor);
    std::string field;
    std::size_t index;
    double value;
    double floor;
};

class NumericalBlowup : public Error {
public:
    NumericalBlowup(double norm, double reference);
    double norm;
    double reference;
};

class NonNeutral : public Error {
public:
    explicit NonNeutral(double mean);
    double mean;
};

class InsufficientData : public Error {
public:
    InsufficientData(std::size_t have, std::size_t need);
};

class NonPositiveValue : public Error {
public:
    NonPositiveValue(double t, double value);
};

class ParseError : public Error {
public:
    ParseError(int line, std::string key, const std::string& message);
    int line;
    std::string key;
};

class ValidationError : public Error {
public:
    ValidationError(std::string key, std::string constraint);
    std::string key;
    std::string constraint;
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error("FormatError", what) {}
};

/// Wraps a stepping failure with the step index at which it happened.
class StepFailure : public Error {
public:
    StepFailure(std::size_t step, const Error& cause);
    std::size_t step;
    std::string cause_kind;
};

}  // namespace emx
