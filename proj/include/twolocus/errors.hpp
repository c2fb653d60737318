#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twolocus {

enum class ErrorKind {
  kInvalidArgument,
  kCapacity,
  kNumeric,
  kUnsupported,
  kIo,
  kIntegrity,
  kNotFound,
  kInternal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::kInvalidArgument, what) {}
};

// Raised when a requested computation exceeds the configured state-space budget.
class CapacityError : public Error {
 public:
  CapacityError(const std::string& what, std::size_t state_count)
      : Error(ErrorKind::kCapacity, what + " (state-space size " + std::to_string(state_count) + ")"),
        state_count_(state_count) {}
  std::size_t state_count() const noexcept { return state_count_; }

 private:
  std::size_t state_count_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::kNumeric, what) {}
};

// Singular denominator system in the Pade table. max_solvable_v is the largest
// V' < V whose [U+V-V'-1 / V'] system is consistent, or -1 if none is.
class DegenerateTableError : public NumericError {
 public:
  DegenerateTableError(const std::string& what, int max_solvable_v)
      : NumericError(what), max_solvable_v_(max_solvable_v) {}
  int max_solvable_v() const noexcept { return max_solvable_v_; }

 private:
  int max_solvable_v_;
};

class PoleError : public NumericError {
 public:
  explicit PoleError(const std::string& what) : NumericError(what) {}
};

class UnsupportedError : public Error {
 public:
  explicit UnsupportedError(const std::string& what) : Error(ErrorKind::kUnsupported, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

class IntegrityError : public Error {
 public:
  explicit IntegrityError(const std::string& what) : Error(ErrorKind::kIntegrity, what) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& what) : Error(ErrorKind::kNotFound, what) {}
};

class InternalError : public Error {
 public:
  explicit InternalError(const std::string& what) : Error(ErrorKind::kInternal, what) {}
};

}  // namespace twolocus
