#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "bcnn/fixed_point.hpp"
#include "bcnn/layers.hpp"

namespace bcnn {

using Layer = std::variant<PoolLayer, ConvLayer, FCLayer>;

struct InputShape {
  std::size_t w = 1;
  std::size_t h = 1;
  std::size_t c = 1;

  std::size_t size() const { return w * h * c; }
  friend bool operator==(const InputShape&, const InputShape&) = default;
};

/// Fixed-point formats attached to a trainable layer after post-training
/// quantization. Pooling layers carry an empty entry.
struct LayerQuantization {
  std::optional<FixedPointFormat> weights;      // first vectors and bias
  std::optional<FixedPointFormat> activations;  // layer outputs
};

/// Ordered stack of layers. Tensors flow between layers as flat vectors in
/// [W, H, C] row-major order, so a CONV output feeds an FC layer directly.
struct Network {
  InputShape input;
  std::vector<Layer> layers;
  std::vector<LayerQuantization> quantization;  // empty, or one per layer

  std::size_t input_size() const { return input.size(); }
  std::size_t output_size() const;
  bool quantized() const { return !quantization.empty(); }
};

std::size_t layer_input_size(const Layer& layer);
std::size_t layer_output_size(const Layer& layer);
bool is_trainable(const Layer& layer);

/// Throws Error(ShapeMismatch) unless adjacent layers compose.
void validate(const Network& net);

/// Activations of every layer; entry 0 is the input, entry l+1 the output of
/// layer l.
struct Trace {
  std::vector<std::vector<double>> values;
};

Trace forward_trace(const Network& net, std::span<const double> input);
std::vector<double> forward(const Network& net, std::span<const double> input);
std::size_t predict(const Network& net, std::span<const double> input);

/// Softmax cross-entropy of one sample; writes dL/dlogits when grad is
/// non-null.
double softmax_cross_entropy(std::span<const double> logits, std::size_t label,
                             std::vector<double>* grad);

struct LayerGradients {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct NetworkGradients {
  std::vector<LayerGradients> layers;  // one per layer, empty for pooling
  std::vector<double> input;           // filled only when requested

  static NetworkGradients zeros_like(const Network& net);
  void scale(double factor);
  void add(const NetworkGradients& other);
};

/// Loss of one sample; its parameter gradients are added into `grads`.
/// `predicted` receives the forward pass's top-1 class when non-null.
double accumulate_gradients(const Network& net, std::span<const double> input,
                            std::size_t label, NetworkGradients& grads,
                            bool want_input = false, std::size_t* predicted = nullptr);

/// Flat views of a trainable layer's parameters.
const BlockCirculantMatrix& layer_weights(const Layer& layer);
const std::vector<double>& layer_bias(const Layer& layer);
BlockCirculantMatrix& layer_weights(Layer& layer);
std::vector<double>& layer_bias(Layer& layer);

std::size_t parameter_count(const Network& net);

}  // namespace bcnn
