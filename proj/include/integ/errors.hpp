#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace integ {

/// Malformed expression source; offset is a byte position into the source.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

class UnknownIdentifierError : public ParseError {
public:
    UnknownIdentifierError(const std::string& name, std::size_t offset)
        : ParseError("unknown identifier '" + name + "'", offset), name_(name) {}
    const std::string& name() const { return name_; }

private:
    std::string name_;
};

/// Evaluation outside the domain of an elementary function (log of non-positive, x/0, ...).
class DomainError : public std::runtime_error {
public:
    DomainError(const std::string& what, std::string subexpression)
        : std::runtime_error(what + " in '" + subexpression + "'"),
          subexpression_(std::move(subexpression)) {}
    const std::string& subexpression() const { return subexpression_; }

private:
    std::string subexpression_;
};

/// Failure of the ODE integrator. `leg` is filled in by multi-leg flow compositions.
class IntegrationError : public std::runtime_error {
public:
    IntegrationError(const std::string& what, double time_reached)
        : std::runtime_error(what), time_reached_(time_reached) {}
    double time_reached() const { return time_reached_; }
    std::optional<std::size_t> leg;

private:
    double time_reached_;
};

/// State norm exceeded the configured bound: suspected incompleteness of the field.
class BlowupError : public IntegrationError {
public:
    using IntegrationError::IntegrationError;
};

class StepUnderflowError : public IntegrationError {
public:
    using IntegrationError::IntegrationError;
};

class PreconditionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DegenerateJacobianError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SpanViolationError : public std::runtime_error {
public:
    SpanViolationError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class NonConvergenceError : public std::runtime_error {
public:
    NonConvergenceError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual_(last_residual) {}
    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

/// Loop passed to an action integral does not close.
class OpenLoopError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input (spec file, CLI flags). Carries file/line when known.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace integ
