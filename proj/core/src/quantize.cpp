#include "bcnn/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "bcnn/error.hpp"

namespace bcnn {

QuantizedModel quantize_model(const Network& net, const QuantizeOptions& options,
                              const Dataset* calibration) {
  FixedPointFormat{options.total_bits, 0}.validate();
  validate(net);
  if (options.full_fixed_point && (calibration == nullptr || calibration->size() == 0)) {
    throw Error(ErrorKind::InvalidArgument,
                "quantize_model: activation quantization needs calibration samples");
  }

  QuantizedModel out;
  out.model = net;
  out.model.quantization.assign(net.layers.size(), {});
  out.report.layers.resize(net.layers.size());

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (!is_trainable(net.layers[l])) {
      continue;
    }
    auto& rep = out.report.layers[l];
    const auto w = layer_weights(net.layers[l]).first_vectors();
    const auto& b = layer_bias(net.layers[l]);
    for (const double v : w) rep.max_abs_weight = std::max(rep.max_abs_weight, std::abs(v));
    for (const double v : b) rep.max_abs_weight = std::max(rep.max_abs_weight, std::abs(v));

    const FixedPointFormat fmt = choose_format(rep.max_abs_weight, options.total_bits);
    rep.weights = fmt;
    std::vector<double> qw(w.size());
    for (std::size_t t = 0; t < w.size(); ++t) {
      rep.saturated_weights += saturates(w[t], fmt) ? 1 : 0;
      qw[t] = quantize_value(w[t], fmt);
    }
    layer_weights(out.model.layers[l]).assign(std::move(qw));
    for (auto& v : layer_bias(out.model.layers[l])) {
      rep.saturated_weights += saturates(v, fmt) ? 1 : 0;
      v = quantize_value(v, fmt);
    }
    out.model.quantization[l].weights = fmt;
    out.report.saturation_events += rep.saturated_weights;
  }

  if (options.full_fixed_point) {
    // Calibrate layer by layer so each format sees the already quantized
    // inputs it will receive at inference time.
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
      double peak = 0.0;
      for (std::size_t i = 0; i < calibration->size(); ++i) {
        const Trace trace = forward_trace(out.model, calibration->sample(i));
        for (const double v : trace.values[l + 1]) {
          peak = std::max(peak, std::abs(v));
        }
      }
      out.report.layers[l].max_abs_activation = peak;
      const FixedPointFormat fmt = choose_format(peak, options.total_bits);
      out.report.layers[l].activations = fmt;
      out.model.quantization[l].activations = fmt;
    }
  }
  return out;
}

}  // namespace bcnn
