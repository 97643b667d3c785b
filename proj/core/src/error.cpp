#include "bcnn/error.hpp"

namespace bcnn {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidLength:
      return "invalid length";
    case ErrorKind::InvalidArgument:
      return "invalid argument";
    case ErrorKind::ShapeMismatch:
      return "shape mismatch";
    case ErrorKind::Data:
      return "data error";
    case ErrorKind::Config:
      return "config error";
    case ErrorKind::Numeric:
      return "numeric failure";
  }
  return "unknown";
}

}  // namespace bcnn
