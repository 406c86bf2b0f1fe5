#pragma once

#include <stdexcept>
#include <string>

namespace latticeccr {

/// Precondition violated by the caller (bad parameters, unsupported input).
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A value lies outside the range the operation is defined on
/// (Brillouin zone, site window, hopping range).
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InsufficientDataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Wave packet reached the window boundary beyond the failure threshold.
class LeakageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical check (unitarity, oracle agreement, residual) exceeded its tolerance.
class ToleranceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid experiment configuration. `field` names the offending key
/// (dotted path), empty for syntax errors.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace latticeccr
