#include "bcnn/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bcnn/error.hpp"

namespace bcnn {

void FixedPointFormat::validate() const {
  if (total_bits < 2 || total_bits > 32) {
    throw Error(ErrorKind::InvalidArgument,
                "fixed point: total_bits must be in [2, 32], got " + std::to_string(total_bits));
  }
  if (frac_bits < 0 || frac_bits >= total_bits) {
    throw Error(ErrorKind::InvalidArgument,
                "fixed point: frac_bits must be in [0, total_bits), got " +
                    std::to_string(frac_bits));
  }
}

double FixedPointFormat::step() const { return std::ldexp(1.0, -frac_bits); }

double FixedPointFormat::max_value() const {
  return static_cast<double>(max_code()) * step();
}

double FixedPointFormat::min_value() const {
  return static_cast<double>(min_code()) * step();
}

std::int64_t quantize_code(double v, const FixedPointFormat& fmt) {
  // nearbyint honours the default round-half-to-even mode.
  const double scaled = std::nearbyint(std::ldexp(v, fmt.frac_bits));
  const double clamped = std::clamp(scaled, static_cast<double>(fmt.min_code()),
                                    static_cast<double>(fmt.max_code()));
  return static_cast<std::int64_t>(clamped);
}

double dequantize(std::int64_t code, const FixedPointFormat& fmt) {
  return std::ldexp(static_cast<double>(code), -fmt.frac_bits);
}

double quantize_value(double v, const FixedPointFormat& fmt) {
  return dequantize(quantize_code(v, fmt), fmt);
}

bool saturates(double v, const FixedPointFormat& fmt) {
  const double scaled = std::nearbyint(std::ldexp(v, fmt.frac_bits));
  return scaled > static_cast<double>(fmt.max_code()) ||
         scaled < static_cast<double>(fmt.min_code());
}

FixedPointFormat choose_format(double max_abs, int total_bits) {
  FixedPointFormat fmt{total_bits, total_bits - 1};
  fmt.validate();
  while (fmt.frac_bits > 0 && (saturates(max_abs, fmt) || saturates(-max_abs, fmt))) {
    --fmt.frac_bits;
  }
  return fmt;
}

}  // namespace bcnn
