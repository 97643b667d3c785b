#include "bcnn/layers.hpp"

#include <algorithm>
#include <string>

#include "bcnn/error.hpp"

namespace bcnn {

double activate(Activation act, double z) {
  return act == Activation::Relu ? std::max(z, 0.0) : z;
}

double activation_slope(Activation act, double y) {
  if (act == Activation::Relu) {
    return y > 0.0 ? 1.0 : 0.0;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// FC

FCLayer FCLayer::make(std::size_t out_dim, std::size_t in_dim, std::size_t k,
                      Activation act, std::mt19937_64& rng) {
  FCLayer layer;
  layer.weights = BlockCirculantMatrix::random(partition(out_dim, in_dim, k), rng);
  layer.bias.assign(out_dim, 0.0);
  layer.activation = act;
  return layer;
}

std::vector<double> fc_forward(const FCLayer& layer, std::span<const double> x) {
  const auto& s = layer.weights.scheme();
  if (x.size() != s.n) {
    throw Error(ErrorKind::ShapeMismatch, "fc_forward: input length " +
                                              std::to_string(x.size()) + ", layer expects " +
                                              std::to_string(s.n));
  }
  const BlockVector a = matvec(layer.weights, BlockVector::from_logical(x, s.k, s.q));
  std::vector<double> y(s.m);
  for (std::size_t r = 0; r < s.m; ++r) {
    y[r] = activate(layer.activation, a.logical()[r] + layer.bias[r]);
  }
  return y;
}

FcGradients fc_backward(const FCLayer& layer, std::span<const double> x,
                        std::span<const double> grad_y, bool want_input) {
  const std::vector<double> y = fc_forward(layer, x);
  return fc_backward(layer, x, y, grad_y, want_input);
}

FcGradients fc_backward(const FCLayer& layer, std::span<const double> x,
                        std::span<const double> y, std::span<const double> grad_y,
                        bool want_input) {
  const auto& s = layer.weights.scheme();
  if (x.size() != s.n || y.size() != s.m || grad_y.size() != s.m) {
    throw Error(ErrorKind::ShapeMismatch, "fc_backward: operand lengths do not match layer " +
                                              std::to_string(s.m) + "x" +
                                              std::to_string(s.n));
  }
  BlockVector grad_a(s.p, s.k, s.m);
  for (std::size_t r = 0; r < s.m; ++r) {
    grad_a.logical()[r] = grad_y[r] * activation_slope(layer.activation, y[r]);
  }
  BlockGradients g = backward(layer.weights, BlockVector::from_logical(x, s.k, s.q), grad_a,
                              want_input);
  FcGradients out;
  out.weights = std::move(g.weights);
  out.bias.assign(grad_a.logical().begin(), grad_a.logical().end());
  if (want_input) {
    out.input.assign(g.input.logical().begin(), g.input.logical().end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// CONV

ConvLayer ConvLayer::make(std::size_t in_w, std::size_t in_h, std::size_t channels,
                          std::size_t out_channels, std::size_t kernel, std::size_t k,
                          Activation act, std::mt19937_64& rng) {
  if (kernel == 0 || kernel > in_w || kernel > in_h) {
    throw Error(ErrorKind::ShapeMismatch, "ConvLayer: kernel larger than input");
  }
  ConvLayer layer;
  layer.in_w = in_w;
  layer.in_h = in_h;
  layer.channels = channels;
  layer.out_channels = out_channels;
  layer.kernel = kernel;
  layer.filter = BlockCirculantMatrix::random(
      partition(out_channels, channels * kernel * kernel, k), rng);
  layer.bias.assign(out_channels, 0.0);
  layer.activation = act;
  return layer;
}

Tensor conv_direct(const Tensor& input, const Tensor& filter) {
  if (input.rank() != 3 || filter.rank() != 4) {
    throw Error(ErrorKind::ShapeMismatch, "conv_direct: expects X[W,H,C] and F[r,r,C,P]");
  }
  const std::size_t w = input.extent(0);
  const std::size_t h = input.extent(1);
  const std::size_t c_in = input.extent(2);
  const std::size_t r = filter.extent(0);
  const std::size_t p_out = filter.extent(3);
  if (filter.extent(1) != r || filter.extent(2) != c_in) {
    throw Error(ErrorKind::ShapeMismatch, "conv_direct: filter shape does not match input");
  }
  if (r == 0 || r > w || r > h) {
    throw Error(ErrorKind::ShapeMismatch, "conv_direct: kernel larger than input");
  }
  Tensor out({w - r + 1, h - r + 1, p_out});
  for (std::size_t x = 0; x + r <= w; ++x) {
    for (std::size_t y = 0; y + r <= h; ++y) {
      for (std::size_t p = 0; p < p_out; ++p) {
        double acc = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < r; ++j) {
            for (std::size_t c = 0; c < c_in; ++c) {
              acc += filter(i, j, c, p) * input(x + i, y + j, c);
            }
          }
        }
        out(x, y, p) = acc;
      }
    }
  }
  return out;
}

Matrix im2col(const Tensor& input, std::size_t kernel) {
  if (input.rank() != 3) {
    throw Error(ErrorKind::ShapeMismatch, "im2col: expects X[W,H,C]");
  }
  const std::size_t w = input.extent(0);
  const std::size_t h = input.extent(1);
  const std::size_t c_in = input.extent(2);
  if (kernel == 0 || kernel > w || kernel > h) {
    throw Error(ErrorKind::ShapeMismatch, "im2col: kernel larger than input");
  }
  const std::size_t ow = w - kernel + 1;
  const std::size_t oh = h - kernel + 1;
  Matrix cols(ow * oh, c_in * kernel * kernel);
  for (std::size_t x = 0; x < ow; ++x) {
    for (std::size_t y = 0; y < oh; ++y) {
      auto row = cols.row(x * oh + y);
      for (std::size_t c = 0; c < c_in; ++c) {
        for (std::size_t i = 0; i < kernel; ++i) {
          for (std::size_t j = 0; j < kernel; ++j) {
            row[im2col_column(i, j, c, kernel)] = input(x + i, y + j, c);
          }
        }
      }
    }
  }
  return cols;
}

Tensor filter_tensor(const ConvLayer& layer) {
  const Matrix dense = expand_dense(layer.filter);
  const std::size_t r = layer.kernel;
  Tensor f({r, r, layer.channels, layer.out_channels});
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < r; ++j) {
      for (std::size_t c = 0; c < layer.channels; ++c) {
        for (std::size_t p = 0; p < layer.out_channels; ++p) {
          f(i, j, c, p) = dense(p, im2col_column(i, j, c, r));
        }
      }
    }
  }
  return f;
}

namespace {

void check_conv_input(const ConvLayer& layer, const Tensor& input, const char* what) {
  if (input.rank() != 3 || input.extent(0) != layer.in_w || input.extent(1) != layer.in_h ||
      input.extent(2) != layer.channels) {
    throw Error(ErrorKind::ShapeMismatch,
                std::string(what) + ": input must be [" + std::to_string(layer.in_w) + "," +
                    std::to_string(layer.in_h) + "," + std::to_string(layer.channels) + "]");
  }
}

}  // namespace

Tensor conv_forward(const ConvLayer& layer, const Tensor& input) {
  check_conv_input(layer, input, "conv_forward");
  const auto& s = layer.filter.scheme();
  const Matrix cols = im2col(input, layer.kernel);
  Tensor out({layer.out_w(), layer.out_h(), layer.out_channels});
  auto out_data = out.data();
  for (std::size_t row = 0; row < cols.rows; ++row) {
    const BlockVector a = matvec(layer.filter, BlockVector::from_logical(cols.row(row), s.k, s.q));
    for (std::size_t p = 0; p < layer.out_channels; ++p) {
      out_data[row * layer.out_channels + p] =
          activate(layer.activation, a.logical()[p] + layer.bias[p]);
    }
  }
  return out;
}

ConvGradients conv_backward(const ConvLayer& layer, const Tensor& input,
                            const Tensor& grad_out, bool want_input) {
  return conv_backward(layer, input, conv_forward(layer, input), grad_out, want_input);
}

ConvGradients conv_backward(const ConvLayer& layer, const Tensor& input,
                            const Tensor& output, const Tensor& grad_out,
                            bool want_input) {
  check_conv_input(layer, input, "conv_backward");
  const std::vector<std::size_t> out_shape{layer.out_w(), layer.out_h(), layer.out_channels};
  if (output.shape() != out_shape || grad_out.shape() != out_shape) {
    throw Error(ErrorKind::ShapeMismatch, "conv_backward: output gradient shape mismatch");
  }
  const auto& s = layer.filter.scheme();
  const Matrix cols = im2col(input, layer.kernel);
  const std::size_t r = layer.kernel;
  const std::size_t oh = layer.out_h();

  ConvGradients grads;
  grads.filter.assign(s.num_weights(), 0.0);
  grads.bias.assign(layer.out_channels, 0.0);
  if (want_input) {
    grads.input = Tensor({layer.in_w, layer.in_h, layer.channels});
  }
  const auto y = output.data();
  const auto gy = grad_out.data();
  for (std::size_t row = 0; row < cols.rows; ++row) {
    BlockVector grad_a(s.p, s.k, s.m);
    for (std::size_t p = 0; p < layer.out_channels; ++p) {
      const std::size_t idx = row * layer.out_channels + p;
      grad_a.logical()[p] = gy[idx] * activation_slope(layer.activation, y[idx]);
      grads.bias[p] += grad_a.logical()[p];
    }
    const BlockGradients g = backward(
        layer.filter, BlockVector::from_logical(cols.row(row), s.k, s.q), grad_a, want_input);
    for (std::size_t t = 0; t < g.weights.size(); ++t) {
      grads.filter[t] += g.weights[t];
    }
    if (want_input) {
      // col2im: scatter the patch gradient back onto the input positions.
      const std::size_t x0 = row / oh;
      const std::size_t y0 = row % oh;
      const auto patch = g.input.logical();
      for (std::size_t c = 0; c < layer.channels; ++c) {
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < r; ++j) {
            grads.input(x0 + i, y0 + j, c) += patch[im2col_column(i, j, c, r)];
          }
        }
      }
    }
  }
  return grads;
}

// ---------------------------------------------------------------------------
// Pooling

namespace {

// Row o holds the fraction of input cell t inside output cell o.
Matrix area_weights(std::size_t in, std::size_t out) {
  Matrix weights(out, in);
  const double span = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double lo = static_cast<double>(o) * span;
    const double hi = static_cast<double>(o + 1) * span;
    for (std::size_t t = 0; t < in; ++t) {
      const double overlap =
          std::min(hi, static_cast<double>(t + 1)) - std::max(lo, static_cast<double>(t));
      if (overlap > 0.0) {
        weights(o, t) = overlap / span;
      }
    }
  }
  return weights;
}

// Separable: resample along W into a scratch tensor, then along H.
Tensor resample(const Tensor& input, const Matrix& ax, const Matrix& ay) {
  const std::size_t w = input.extent(0);
  const std::size_t h = input.extent(1);
  const std::size_t ch = input.extent(2);
  Tensor partial({ax.rows, h, ch});
  for (std::size_t ox = 0; ox < ax.rows; ++ox) {
    for (std::size_t x = 0; x < w; ++x) {
      const double wx = ax(ox, x);
      if (wx == 0.0) {
        continue;
      }
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t c = 0; c < ch; ++c) {
          partial(ox, y, c) += wx * input(x, y, c);
        }
      }
    }
  }
  Tensor out({ax.rows, ay.rows, ch});
  for (std::size_t ox = 0; ox < ax.rows; ++ox) {
    for (std::size_t oy = 0; oy < ay.rows; ++oy) {
      for (std::size_t y = 0; y < h; ++y) {
        const double wy = ay(oy, y);
        if (wy == 0.0) {
          continue;
        }
        for (std::size_t c = 0; c < ch; ++c) {
          out(ox, oy, c) += wy * partial(ox, y, c);
        }
      }
    }
  }
  return out;
}

Matrix transposed(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    for (std::size_t c = 0; c < m.cols; ++c) {
      t(c, r) = m(r, c);
    }
  }
  return t;
}

}  // namespace

Tensor average_pool(const Tensor& input, std::size_t out_w, std::size_t out_h) {
  if (input.rank() != 3 || out_w == 0 || out_h == 0 || out_w > input.extent(0) ||
      out_h > input.extent(1)) {
    throw Error(ErrorKind::ShapeMismatch, "average_pool: cannot pool to a larger extent");
  }
  return resample(input, area_weights(input.extent(0), out_w),
                  area_weights(input.extent(1), out_h));
}

Tensor average_pool_backward(const Tensor& grad_out, std::size_t in_w, std::size_t in_h) {
  if (grad_out.rank() != 3 || grad_out.extent(0) > in_w || grad_out.extent(1) > in_h) {
    throw Error(ErrorKind::ShapeMismatch, "average_pool_backward: shape mismatch");
  }
  // The pooling map is linear and separable; its adjoint resamples with the
  // transposed weight matrices.
  return resample(grad_out, transposed(area_weights(in_w, grad_out.extent(0))),
                  transposed(area_weights(in_h, grad_out.extent(1))));
}

}  // namespace bcnn
