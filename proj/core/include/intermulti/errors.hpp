#pragma once

#include <stdexcept>
#include <string>

namespace intermulti {

// Shape, rank or axis mismatch between tensors (or between a tensor and a
// parameter block).
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite value detected at an op boundary, or training diverged.
// `op()` names the operation that produced the first bad value.
class NumericError : public std::runtime_error {
 public:
  NumericError(std::string op, const std::string& what)
      : std::runtime_error(what), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

// Bad configuration: unknown ablation id, invalid JSON field, unusable flag
// combination. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad or unreadable data: malformed container, dim mismatch, missing split.
// Maps to CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace intermulti
