#pragma once

#include <stdexcept>
#include <string>

namespace pisf {

// Bad arguments, malformed configs, contract violations by the caller.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Failures while doing otherwise-valid work (I/O, numerics blowing up).
class RuntimeError : public std::runtime_error {
public:
  explicit RuntimeError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-format errors carry a machine-checkable kind so callers can tell
// a bad magic from a truncated payload.
class IoError : public RuntimeError {
public:
  enum class Kind {
    OpenFailed,
    BadMagic,
    BadVersion,
    BadDtype,
    BadHeader,
    LengthMismatch,
  };

  IoError(Kind kind, const std::string& msg) : RuntimeError(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

} // namespace pisf
