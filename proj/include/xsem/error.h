#pragma once

#include <stdexcept>
#include <string>

namespace xsem {

// Failure category; the CLI maps each one to its exit code.
enum class ErrorKind {
  kInput = 2,      // malformed or invalid input
  kAlignment = 3,  // corpora that do not line up
  kNumeric = 4,    // non-finite values, failed numeric checks
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }
  int exit_code() const { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

inline Error InputError(const std::string& message) {
  return Error(ErrorKind::kInput, message);
}

inline Error AlignmentError(const std::string& message) {
  return Error(ErrorKind::kAlignment, message);
}

inline Error NumericError(const std::string& message) {
  return Error(ErrorKind::kNumeric, message);
}

}  // namespace xsem
