#pragma once

#include <stdexcept>
#include <string>

namespace hyperhall {

// Point on the ideal boundary or outside the model.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// Element budget or memory limit exceeded.
struct ResourceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Fermi level not inside a spectral gap, or a gap closes along a family.
struct GapError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Iterative solver or refinement check failed.
struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Config or argument outside the accepted schema.
struct SchemaError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace hyperhall
