#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "bcnn/dataset.hpp"
#include "bcnn/fixed_point.hpp"
#include "bcnn/network.hpp"

namespace bcnn {

struct QuantizeOptions {
  int total_bits = 12;
  /// Also quantize every layer output. Needs calibration samples to pick the
  /// activation formats.
  bool full_fixed_point = true;
};

struct LayerQuantReport {
  std::optional<FixedPointFormat> weights;
  std::optional<FixedPointFormat> activations;
  double max_abs_weight = 0.0;
  double max_abs_activation = 0.0;
  std::size_t saturated_weights = 0;
};

struct QuantizationReport {
  std::vector<LayerQuantReport> layers;
  std::size_t saturation_events = 0;
};

struct QuantizedModel {
  Network model;
  QuantizationReport report;
};

/// Post-training quantization. Each trainable layer gets one format whose
/// frac_bits are the largest that still cover max |w| over its first vectors
/// and bias. With full_fixed_point, activation formats are chosen the same way
/// from the largest output magnitude seen on `calibration`.
QuantizedModel quantize_model(const Network& net, const QuantizeOptions& options,
                              const Dataset* calibration = nullptr);

}  // namespace bcnn
