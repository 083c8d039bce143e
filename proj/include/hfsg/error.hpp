#pragma once

#include <stdexcept>
#include <string>

namespace hfsg {

// Base for all library errors. The CLI maps each family to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed serialized input. Message names the record and field.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A value violates its type invariants or an operation's domain.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Ratio or statistic undefined for the given input (e.g. empty mask).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class DuplicateEvidenceError : public Error {
 public:
  using Error::Error;
};

class RecipeError : public Error {
 public:
  using Error::Error;
};

// Internal consistency check failed; indicates a bug, not bad input.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace hfsg
