#pragma once

#include <stdexcept>
#include <string>

namespace ackscope {

// Malformed scenario or configuration. Carries the 1-based source line when
// the problem can be attributed to one (0 otherwise).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what, int line = 0)
      : std::runtime_error(what), line_(line) {}

  int line() const { return line_; }

 private:
  int line_;
};

// Caller passed a value outside an operation's domain.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Observed data contradicts a protocol invariant (e.g. a reused device index).
class DataIntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ackscope
