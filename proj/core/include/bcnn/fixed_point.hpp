#pragma once

#include <cstdint>

namespace bcnn {

/// Signed two's-complement fixed point: total_bits including the sign,
/// frac_bits after the binary point. Grid step is 2^-frac_bits.
struct FixedPointFormat {
  int total_bits = 12;
  int frac_bits = 8;

  /// Throws Error(InvalidArgument) unless 2 <= total_bits <= 32 and
  /// 0 <= frac_bits < total_bits.
  void validate() const;

  double step() const;
  std::int64_t max_code() const { return (std::int64_t{1} << (total_bits - 1)) - 1; }
  std::int64_t min_code() const { return -(std::int64_t{1} << (total_bits - 1)); }
  double max_value() const;
  double min_value() const;

  friend bool operator==(const FixedPointFormat&, const FixedPointFormat&) = default;
};

/// Round to nearest (ties to even), saturating at the format range.
std::int64_t quantize_code(double v, const FixedPointFormat& fmt);
double dequantize(std::int64_t code, const FixedPointFormat& fmt);
double quantize_value(double v, const FixedPointFormat& fmt);
/// True when v lies outside the representable range and would be clamped.
bool saturates(double v, const FixedPointFormat& fmt);

/// Largest frac_bits whose range still covers max_abs.
FixedPointFormat choose_format(double max_abs, int total_bits);

}  // namespace bcnn
