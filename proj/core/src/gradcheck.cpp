#include "bcnn/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

#include "bcnn/layers.hpp"
#include "bcnn/network.hpp"

namespace bcnn {

namespace {

// L(y) = sum_i c_i y_i + 0.5 y_i^2, so dL/dy = c + y.
struct QuadraticLoss {
  std::vector<double> c;

  double value(std::span<const double> y) const {
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += c[i] * y[i] + 0.5 * y[i] * y[i];
    return total;
  }
  std::vector<double> grad(std::span<const double> y) const {
    std::vector<double> g(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) g[i] = c[i] + y[i];
    return g;
  }
};

std::vector<double> uniform(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

// Central differences of f over every coordinate of `point`.
std::vector<double> numeric_gradient(std::vector<double> point, double h,
                                     const std::function<double(const std::vector<double>&)>& f) {
  std::vector<double> g(point.size());
  for (std::size_t t = 0; t < point.size(); ++t) {
    const double saved = point[t];
    point[t] = saved + h;
    const double up = f(point);
    point[t] = saved - h;
    const double down = f(point);
    point[t] = saved;
    g[t] = (up - down) / (2.0 * h);
  }
  return g;
}

std::vector<double> to_vector(std::span<const double> v) { return {v.begin(), v.end()}; }

std::vector<double> concat(std::span<const double> a, std::span<const double> b) {
  std::vector<double> out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

GradCheckCase make_case(std::string name, std::vector<double> analytic,
                        const std::vector<double>& numeric, const GradCheckOptions& opt) {
  if (opt.flip_sign) {
    for (auto& v : analytic) v = -v;
  }
  GradCheckCase c;
  c.name = std::move(name);
  c.coordinates = numeric.size();
  c.relative_error = gradient_relative_error(analytic, numeric);
  c.passed = analytic.size() == numeric.size() && c.relative_error <= opt.tolerance;
  return c;
}

void check_fc(const GradCheckOptions& opt, std::mt19937_64& rng, GradCheckReport& report) {
  const std::size_t k = opt.k;
  const std::size_t m = 2 * k + 3;
  const std::size_t n = 3 * k + 1;
  FCLayer layer = FCLayer::make(m, n, k, Activation::Identity, rng);
  layer.bias = uniform(m, rng);
  const std::vector<double> x = uniform(n, rng);
  const QuadraticLoss loss{uniform(m, rng)};

  const auto y = fc_forward(layer, x);
  const FcGradients g = fc_backward(layer, x, loss.grad(y), true);

  const std::size_t nw = layer.weights.first_vectors().size();
  const auto params = concat(layer.weights.first_vectors(), layer.bias);
  const auto num_params = numeric_gradient(params, opt.step, [&](const std::vector<double>& p) {
    FCLayer l = layer;
    l.weights.assign({p.begin(), p.begin() + static_cast<std::ptrdiff_t>(nw)});
    l.bias.assign(p.begin() + static_cast<std::ptrdiff_t>(nw), p.end());
    return loss.value(fc_forward(l, x));
  });
  report.cases.push_back(make_case("fc_weights", concat(g.weights, g.bias), num_params, opt));

  const auto num_input = numeric_gradient(
      x, opt.step, [&](const std::vector<double>& v) { return loss.value(fc_forward(layer, v)); });
  report.cases.push_back(make_case("fc_inputs", g.input, num_input, opt));
}

void check_conv(const GradCheckOptions& opt, std::mt19937_64& rng, GradCheckReport& report) {
  ConvLayer layer = ConvLayer::make(5, 5, 1, 2, 3, opt.k, Activation::Identity, rng);
  layer.bias = uniform(layer.out_channels, rng);
  const Tensor x({5, 5, 1}, uniform(25, rng));
  const std::size_t out = layer.out_w() * layer.out_h() * layer.out_channels;
  const QuadraticLoss loss{uniform(out, rng)};

  const Tensor y = conv_forward(layer, x);
  const Tensor gy(y.shape(), loss.grad(y.data()));
  const ConvGradients g = conv_backward(layer, x, gy, true);

  const std::size_t nw = layer.filter.first_vectors().size();
  const auto params = concat(layer.filter.first_vectors(), layer.bias);
  const auto num_params = numeric_gradient(params, opt.step, [&](const std::vector<double>& p) {
    ConvLayer l = layer;
    l.filter.assign({p.begin(), p.begin() + static_cast<std::ptrdiff_t>(nw)});
    l.bias.assign(p.begin() + static_cast<std::ptrdiff_t>(nw), p.end());
    return loss.value(conv_forward(l, x).data());
  });
  report.cases.push_back(make_case("conv_filters", concat(g.filter, g.bias), num_params, opt));

  const auto num_input = numeric_gradient(to_vector(x.data()), opt.step,
                                          [&](const std::vector<double>& v) {
                                            return loss.value(
                                                conv_forward(layer, Tensor({5, 5, 1}, v)).data());
                                          });
  report.cases.push_back(make_case("conv_inputs", to_vector(g.input.data()), num_input, opt));
}

void check_network(const GradCheckOptions& opt, std::mt19937_64& rng, GradCheckReport& report) {
  Network net;
  net.input = {6, 6, 1};
  net.layers.emplace_back(ConvLayer::make(6, 6, 1, 2, 3, opt.k, Activation::Relu, rng));
  net.layers.emplace_back(FCLayer::make(5, 32, opt.k, Activation::Relu, rng));
  net.layers.emplace_back(FCLayer::make(3, 5, opt.k, Activation::SoftmaxLogits, rng));
  for (auto& layer : net.layers) {
    for (auto& b : layer_bias(layer)) b = 0.1 * uniform(1, rng)[0];
  }
  const std::vector<double> x = uniform(net.input_size(), rng);
  const std::size_t label = 1;
  auto loss_of = [&](const Network& n, std::span<const double> in) {
    return softmax_cross_entropy(forward(n, in), label, nullptr);
  };

  NetworkGradients g = NetworkGradients::zeros_like(net);
  accumulate_gradients(net, x, label, g, true);

  std::vector<double> analytic;
  std::vector<double> numeric;
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const std::size_t nw = layer_weights(net.layers[l]).first_vectors().size();
    const auto params = concat(layer_weights(net.layers[l]).first_vectors(),
                               layer_bias(net.layers[l]));
    const auto num = numeric_gradient(params, opt.step, [&](const std::vector<double>& p) {
      Network copy = net;
      layer_weights(copy.layers[l]).assign({p.begin(), p.begin() + static_cast<std::ptrdiff_t>(nw)});
      layer_bias(copy.layers[l]).assign(p.begin() + static_cast<std::ptrdiff_t>(nw), p.end());
      return loss_of(copy, x);
    });
    const auto ana = concat(g.layers[l].weights, g.layers[l].bias);
    analytic.insert(analytic.end(), ana.begin(), ana.end());
    numeric.insert(numeric.end(), num.begin(), num.end());
  }
  report.cases.push_back(make_case("network_parameters", analytic, numeric, opt));

  const auto num_input = numeric_gradient(
      x, opt.step, [&](const std::vector<double>& v) { return loss_of(net, v); });
  report.cases.push_back(make_case("network_input", g.input, num_input, opt));
}

}  // namespace

bool GradCheckReport::passed() const {
  for (const auto& c : cases) {
    if (!c.passed) return false;
  }
  return !cases.empty();
}

double gradient_relative_error(std::span<const double> analytic,
                               std::span<const double> numeric) {
  if (analytic.size() != numeric.size()) {
    return std::numeric_limits<double>::infinity();
  }
  double diff = 0.0;
  double na = 0.0;
  double nn = 0.0;
  for (std::size_t t = 0; t < analytic.size(); ++t) {
    diff += (analytic[t] - numeric[t]) * (analytic[t] - numeric[t]);
    na += analytic[t] * analytic[t];
    nn += numeric[t] * numeric[t];
  }
  const double scale = std::sqrt(std::max(na, nn));
  return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

GradCheckReport run_gradcheck(const GradCheckOptions& options) {
  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  check_fc(options, rng, report);
  check_conv(options, rng, report);
  check_network(options, rng, report);
  return report;
}

std::string format_gradcheck(const GradCheckReport& report) {
  std::ostringstream out;
  out << std::left << std::setw(20) << "case" << std::right << std::setw(8) << "coords"
      << std::setw(14) << "rel_error" << "  result\n";
  for (const auto& c : report.cases) {
    out << std::left << std::setw(20) << c.name << std::right << std::setw(8) << c.coordinates
        << std::setw(14) << std::scientific << std::setprecision(3) << c.relative_error
        << std::defaultfloat << "  " << (c.passed ? "PASS" : "FAIL") << '\n';
  }
  return out.str();
}

}  // namespace bcnn
