#pragma once

#include <stdexcept>
#include <string>

namespace engage {

/// Malformed or inconsistent configuration. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The Bellman solver could not bracket or classify. Maps to exit code 3.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid policy or simulation setup. Maps to exit code 4.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a mathematical function.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace engage
