#pragma once

#include <stdexcept>
#include <string>

namespace symreg {

// Base class for all errors thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Caller violated an operation's precondition (incomplete tree, bad index, ...).
class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(what) {}
};

// Malformed structure (inconsistent parent links, bad child slots).
class StructuralError : public Error {
 public:
  explicit StructuralError(const std::string& what) : Error(what) {}
};

// Input data is unusable (missing file, unreadable stream).
class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(what) {}
};

// Text could not be parsed; `position` is a 0-based character offset.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position(position) {}
  std::size_t position;
};

// A stored contract was broken at replay time (e.g. a sampled token is
// masked out when its trajectory is re-scored).
class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& what) : Error(what) {}
};

}  // namespace symreg
