#pragma once

#include <stdexcept>
#include <string>

namespace npbandit {

// Bad shapes, out-of-range parameters, malformed inputs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Eigensolver non-convergence, indefinite matrices, ill-conditioned solves.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The instance admits no well-defined optimum (e.g. M* r = 0 on the unit ball).
class DegenerateInstance : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The policy set does not contain a policy collinear enough with a designed direction.
class AssumptionViolated : public std::runtime_error {
public:
    AssumptionViolated(const std::string& what, std::size_t direction_index)
        : std::runtime_error(what), direction_index_(direction_index) {}

    [[nodiscard]] std::size_t direction_index() const noexcept { return direction_index_; }

private:
    std::size_t direction_index_;
};

// Random cover construction ran out of its point budget.
class CoverageFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Experiment configuration could not be parsed or validated.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace npbandit
