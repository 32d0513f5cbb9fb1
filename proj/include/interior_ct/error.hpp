#pragma once

#include <stdexcept>
#include <string>

namespace interior_ct {

/// Raised when inputs violate a documented precondition.
class ValidationError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// File-system or format problems while reading/writing artifacts.
class IoError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class FormatError : public IoError {
  public:
    using IoError::IoError;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ValidationError(message);
}

} // namespace interior_ct
