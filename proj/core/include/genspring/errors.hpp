#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace genspring {

// Base of every error raised by the library. Subclasses name the failure
// category so callers (CLI, service) can map them to exit codes or HTTP status.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller passed an argument outside the operation's contract.
class ParameterError : public Error {
 public:
  using Error::Error;
};

// Style parameters produce a degenerate shape (zero radius, zero periods, ...).
class GeometryError : public Error {
 public:
  using Error::Error;
};

// An operation requiring a printable (connected) design got one that is not.
class PrintabilityError : public Error {
 public:
  using Error::Error;
};

// Non-finite values where finite ones are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Correlation matrix could not be factored even after jitter escalation.
class ConditioningError : public Error {
 public:
  using Error::Error;
};

// Evaluation protocol broken (e.g. fitness requested from all-missing trials).
class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Object used in a state that does not allow the requested operation.
class StateError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration file or inconsistent experiment settings.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Human submission rejected; carries per-field messages for the UI.
class ValidationError : public Error {
 public:
  struct Field {
    std::string name;
    std::string message;
  };

  ValidationError(std::string message, std::vector<Field> fields)
      : Error(std::move(message)), fields_(std::move(fields)) {}

  const std::vector<Field>& fields() const noexcept { return fields_; }

 private:
  std::vector<Field> fields_;
};

}  // namespace genspring
