#pragma once

#include <stdexcept>
#include <string>

namespace iusp {

// Error categories used across the library. The CLI maps each category to a
// one-line machine-parsable diagnostic and a nonzero exit code.

class InvalidInput : public std::runtime_error {
 public:
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class IndexError : public std::out_of_range {
 public:
  explicit IndexError(const std::string& what) : std::out_of_range(what) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a training step produces a non-finite loss. Carries the step
// index so the offending update can be located in the loss log.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

// Raised by the micro PR curve when the label matrix has no positives, so
// recall is undefined for every threshold.
class UndefinedRecallError : public std::runtime_error {
 public:
  explicit UndefinedRecallError(const std::string& what)
      : std::runtime_error(what) {}
};

}  // namespace iusp
