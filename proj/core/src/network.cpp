#include "bcnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bcnn/error.hpp"

namespace bcnn {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

Tensor as_tensor(std::span<const double> v, std::size_t w, std::size_t h, std::size_t c) {
  return Tensor({w, h, c}, std::vector<double>(v.begin(), v.end()));
}

}  // namespace

std::size_t layer_input_size(const Layer& layer) {
  return std::visit(Overloaded{
                        [](const PoolLayer& l) { return l.in_w * l.in_h * l.channels; },
                        [](const ConvLayer& l) { return l.in_w * l.in_h * l.channels; },
                        [](const FCLayer& l) { return l.in_dim(); },
                    },
                    layer);
}

std::size_t layer_output_size(const Layer& layer) {
  return std::visit(
      Overloaded{
          [](const PoolLayer& l) { return l.out_w * l.out_h * l.channels; },
          [](const ConvLayer& l) { return l.out_w() * l.out_h() * l.out_channels; },
          [](const FCLayer& l) { return l.out_dim(); },
      },
      layer);
}

bool is_trainable(const Layer& layer) { return !std::holds_alternative<PoolLayer>(layer); }

std::size_t Network::output_size() const {
  return layers.empty() ? input.size() : layer_output_size(layers.back());
}

void validate(const Network& net) {
  std::size_t width = net.input.size();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (layer_input_size(net.layers[l]) != width) {
      throw Error(ErrorKind::ShapeMismatch,
                  "network: layer " + std::to_string(l) + " expects " +
                      std::to_string(layer_input_size(net.layers[l])) +
                      " inputs but receives " + std::to_string(width));
    }
    if (const auto* fc = std::get_if<FCLayer>(&net.layers[l])) {
      if (fc->bias.size() != fc->out_dim()) {
        throw Error(ErrorKind::ShapeMismatch,
                    "network: layer " + std::to_string(l) + " bias length mismatch");
      }
    }
    if (const auto* conv = std::get_if<ConvLayer>(&net.layers[l])) {
      const auto& s = conv->filter.scheme();
      if (s.m != conv->out_channels || s.n != conv->patch_len() ||
          conv->bias.size() != conv->out_channels) {
        throw Error(ErrorKind::ShapeMismatch,
                    "network: layer " + std::to_string(l) + " filter shape mismatch");
      }
    }
    width = layer_output_size(net.layers[l]);
  }
  if (!net.quantization.empty() && net.quantization.size() != net.layers.size()) {
    throw Error(ErrorKind::ShapeMismatch, "network: quantization table length mismatch");
  }
}

Trace forward_trace(const Network& net, std::span<const double> input) {
  if (input.size() != net.input_size()) {
    throw Error(ErrorKind::ShapeMismatch, "forward: input length " +
                                              std::to_string(input.size()) + ", network expects " +
                                              std::to_string(net.input_size()));
  }
  Trace trace;
  trace.values.reserve(net.layers.size() + 1);
  trace.values.emplace_back(input.begin(), input.end());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const std::vector<double>& x = trace.values.back();
    std::vector<double> y = std::visit(
        Overloaded{
            [&](const PoolLayer& p) {
              const Tensor out =
                  average_pool(as_tensor(x, p.in_w, p.in_h, p.channels), p.out_w, p.out_h);
              return std::vector<double>(out.data().begin(), out.data().end());
            },
            [&](const ConvLayer& c) {
              const Tensor out = conv_forward(c, as_tensor(x, c.in_w, c.in_h, c.channels));
              return std::vector<double>(out.data().begin(), out.data().end());
            },
            [&](const FCLayer& f) {
              return fc_forward(f, x);
            },
        },
        net.layers[l]);
    if (net.quantized() && net.quantization[l].activations) {
      for (auto& v : y) {
        v = quantize_value(v, *net.quantization[l].activations);
      }
    }
    trace.values.push_back(std::move(y));
  }
  return trace;
}

std::vector<double> forward(const Network& net, std::span<const double> input) {
  return std::move(forward_trace(net, input).values.back());
}

std::size_t predict(const Network& net, std::span<const double> input) {
  const std::vector<double> logits = forward(net, input);
  return static_cast<std::size_t>(
      std::distance(logits.begin(), std::max_element(logits.begin(), logits.end())));
}

double softmax_cross_entropy(std::span<const double> logits, std::size_t label,
                             std::vector<double>* grad) {
  if (label >= logits.size()) {
    throw Error(ErrorKind::ShapeMismatch, "softmax_cross_entropy: label out of range");
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (const double z : logits) {
    total += std::exp(z - peak);
  }
  const double log_norm = peak + std::log(total);
  if (grad != nullptr) {
    grad->resize(logits.size());
    for (std::size_t t = 0; t < logits.size(); ++t) {
      (*grad)[t] = std::exp(logits[t] - log_norm) - (t == label ? 1.0 : 0.0);
    }
  }
  return log_norm - logits[label];
}

NetworkGradients NetworkGradients::zeros_like(const Network& net) {
  NetworkGradients g;
  g.layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (is_trainable(net.layers[l])) {
      g.layers[l].weights.assign(layer_weights(net.layers[l]).first_vectors().size(), 0.0);
      g.layers[l].bias.assign(layer_bias(net.layers[l]).size(), 0.0);
    }
  }
  return g;
}

void NetworkGradients::scale(double factor) {
  for (auto& layer : layers) {
    for (auto& v : layer.weights) v *= factor;
    for (auto& v : layer.bias) v *= factor;
  }
  for (auto& v : input) v *= factor;
}

void NetworkGradients::add(const NetworkGradients& other) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    for (std::size_t t = 0; t < layers[l].weights.size(); ++t) {
      layers[l].weights[t] += other.layers[l].weights[t];
    }
    for (std::size_t t = 0; t < layers[l].bias.size(); ++t) {
      layers[l].bias[t] += other.layers[l].bias[t];
    }
  }
  if (input.size() == other.input.size()) {
    for (std::size_t t = 0; t < input.size(); ++t) input[t] += other.input[t];
  }
}

double accumulate_gradients(const Network& net, std::span<const double> input,
                            std::size_t label, NetworkGradients& grads, bool want_input,
                            std::size_t* predicted) {
  const Trace trace = forward_trace(net, input);
  if (predicted != nullptr) {
    const auto& logits = trace.values.back();
    *predicted = static_cast<std::size_t>(
        std::distance(logits.begin(), std::max_element(logits.begin(), logits.end())));
  }
  std::vector<double> grad;
  const double loss = softmax_cross_entropy(trace.values.back(), label, &grad);

  std::size_t first_trainable = net.layers.size();
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (is_trainable(net.layers[l])) {
      first_trainable = l;
      break;
    }
  }

  for (std::size_t l = net.layers.size(); l-- > 0;) {
    const bool need_input = want_input || l > first_trainable;
    const std::vector<double>& x = trace.values[l];
    const std::vector<double>& y = trace.values[l + 1];
    LayerGradients& dst = grads.layers[l];
    std::vector<double> next = std::visit(
        Overloaded{
            [&](const PoolLayer& p) {
              if (!need_input) {
                return std::vector<double>{};
              }
              const Tensor g = average_pool_backward(
                  as_tensor(grad, p.out_w, p.out_h, p.channels), p.in_w, p.in_h);
              return std::vector<double>(g.data().begin(), g.data().end());
            },
            [&](const ConvLayer& c) {
              ConvGradients g = conv_backward(
                  c, as_tensor(x, c.in_w, c.in_h, c.channels),
                  as_tensor(y, c.out_w(), c.out_h(), c.out_channels),
                  as_tensor(grad, c.out_w(), c.out_h(), c.out_channels), need_input);
              for (std::size_t t = 0; t < g.filter.size(); ++t) dst.weights[t] += g.filter[t];
              for (std::size_t t = 0; t < g.bias.size(); ++t) dst.bias[t] += g.bias[t];
              return need_input ? std::vector<double>(g.input.data().begin(), g.input.data().end())
                                : std::vector<double>{};
            },
            [&](const FCLayer& f) {
              FcGradients g = fc_backward(f, x, y, grad, need_input);
              for (std::size_t t = 0; t < g.weights.size(); ++t) dst.weights[t] += g.weights[t];
              for (std::size_t t = 0; t < g.bias.size(); ++t) dst.bias[t] += g.bias[t];
              return std::move(g.input);
            },
        },
        net.layers[l]);
    if (!need_input) {
      break;
    }
    grad = std::move(next);
  }
  if (want_input) {
    if (grads.input.size() != grad.size()) {
      grads.input.assign(grad.size(), 0.0);
    }
    for (std::size_t t = 0; t < grad.size(); ++t) grads.input[t] += grad[t];
  }
  return loss;
}

const BlockCirculantMatrix& layer_weights(const Layer& layer) {
  if (const auto* fc = std::get_if<FCLayer>(&layer)) return fc->weights;
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) return conv->filter;
  throw Error(ErrorKind::InvalidArgument, "layer has no weights");
}

const std::vector<double>& layer_bias(const Layer& layer) {
  if (const auto* fc = std::get_if<FCLayer>(&layer)) return fc->bias;
  if (const auto* conv = std::get_if<ConvLayer>(&layer)) return conv->bias;
  throw Error(ErrorKind::InvalidArgument, "layer has no bias");
}

BlockCirculantMatrix& layer_weights(Layer& layer) {
  return const_cast<BlockCirculantMatrix&>(layer_weights(std::as_const(layer)));
}

std::vector<double>& layer_bias(Layer& layer) {
  return const_cast<std::vector<double>&>(layer_bias(std::as_const(layer)));
}

std::size_t parameter_count(const Network& net) {
  std::size_t total = 0;
  for (const auto& layer : net.layers) {
    if (is_trainable(layer)) {
      total += layer_weights(layer).first_vectors().size() + layer_bias(layer).size();
    }
  }
  return total;
}

}  // namespace bcnn
