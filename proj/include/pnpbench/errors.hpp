#pragma once

#include <stdexcept>
#include <string>

namespace pnpbench {

// Raised when a factorization fails or an iterate stops being finite.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, int index = -1)
      : std::runtime_error(what), index_(index) {}

  // Component, step, or coordinate index the failure refers to (-1 if none).
  int index() const { return index_; }

 private:
  int index_;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pnpbench
