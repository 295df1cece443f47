#pragma once

#include <stdexcept>
#include <string>

namespace brar {

// Invalid mathematical argument or malformed state/design input.
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Configuration document violates the schema or cross-field constraints.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Request is well-formed but exceeds a configured resource or accuracy budget.
// Messages include the estimate that triggered the refusal and, where
// applicable, a scaled-down suggestion.
class FeasibilityError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Internal numerical invariant violated beyond repair.
class ConsistencyError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

}  // namespace brar
