#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace bcnn {

struct GradCheckOptions {
  double step = 1e-5;       // central difference step
  double tolerance = 1e-4;  // on the relative error below
  std::uint64_t seed = 1;
  std::size_t k = 2;        // block size of the small instances
  bool flip_sign = false;   // mutation hook: negate every analytic gradient
};

struct GradCheckCase {
  std::string name;
  std::size_t coordinates = 0;
  double relative_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<GradCheckCase> cases;
  bool passed() const;
};

/// ||a - n|| / max(||a||, ||n||), or 0 when both vanish.
double gradient_relative_error(std::span<const double> analytic,
                               std::span<const double> numeric);

/// Central differences against the analytic backward passes of: FC weights
/// and bias, FC inputs, CONV filter and bias, CONV inputs, and the softmax
/// cross-entropy loss of a small CONV + FC network (all parameters and the
/// input). Instances are drawn from `seed`.
GradCheckReport run_gradcheck(const GradCheckOptions& options);

std::string format_gradcheck(const GradCheckReport& report);

}  // namespace bcnn
