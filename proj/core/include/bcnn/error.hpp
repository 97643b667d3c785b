#pragma once

#include <stdexcept>
#include <string>

namespace bcnn {

enum class ErrorKind {
  InvalidLength,    // transform length is not a power of two, or mismatched
  InvalidArgument,  // bad parameter value (block size, format, ...)
  ShapeMismatch,    // operand extents disagree
  Data,             // malformed or corrupt input file
  Config,           // missing or malformed configuration field
  Numeric,          // divergence, NaN/inf, failed numerical check
};

const char* to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit code without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bcnn
