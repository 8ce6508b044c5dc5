#pragma once

#include <stdexcept>
#include <string>

namespace coopstyle {

/// Shape or configuration mismatch detected before any computation runs.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller-supplied data violates an operation's precondition.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A loss, gradient or parameter became non-finite during an update.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace coopstyle
