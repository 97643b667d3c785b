#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "bcnn/block_circulant.hpp"
#include "bcnn/dense.hpp"
#include "bcnn/tensor.hpp"

namespace bcnn {

enum class Activation {
  Identity,
  Relu,
  SoftmaxLogits,  // identity in the layer; the loss applies the softmax
};

double activate(Activation act, double z);
/// Derivative expressed through the activation output y.
double activation_slope(Activation act, double y);

// ---------------------------------------------------------------------------
// Fully connected: y = act(W x + theta)

struct FCLayer {
  BlockCirculantMatrix weights;
  std::vector<double> bias;
  Activation activation = Activation::Relu;

  static FCLayer make(std::size_t out_dim, std::size_t in_dim, std::size_t k,
                      Activation act, std::mt19937_64& rng);

  std::size_t in_dim() const { return weights.scheme().n; }
  std::size_t out_dim() const { return weights.scheme().m; }
};

std::vector<double> fc_forward(const FCLayer& layer, std::span<const double> x);

struct FcGradients {
  std::vector<double> weights;  // first-vector layout
  std::vector<double> bias;
  std::vector<double> input;    // empty when not requested
};

FcGradients fc_backward(const FCLayer& layer, std::span<const double> x,
                        std::span<const double> grad_y, bool want_input = true);
/// Same, reusing an already computed forward output y.
FcGradients fc_backward(const FCLayer& layer, std::span<const double> x,
                        std::span<const double> y, std::span<const double> grad_y,
                        bool want_input);

// ---------------------------------------------------------------------------
// Convolution. Input X[W, H, C], filter F[r, r, C, P], output
// Y[W - r + 1, H - r + 1, P]; stride 1, no spatial padding.
//
// The reshaped filter matrix F in R^{C r^2 x P} is stored transposed as a
// P x C r^2 block-circulant matrix, so each im2col row maps to its output
// channels with one matvec.

struct ConvLayer {
  std::size_t in_w = 0;
  std::size_t in_h = 0;
  std::size_t channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  BlockCirculantMatrix filter;
  std::vector<double> bias;
  Activation activation = Activation::Relu;

  static ConvLayer make(std::size_t in_w, std::size_t in_h, std::size_t channels,
                        std::size_t out_channels, std::size_t kernel, std::size_t k,
                        Activation act, std::mt19937_64& rng);

  std::size_t out_w() const { return in_w - kernel + 1; }
  std::size_t out_h() const { return in_h - kernel + 1; }
  std::size_t patch_len() const { return channels * kernel * kernel; }
};

/// Literal evaluation of Y(x,y,p) = sum_{i,j,c} F(i,j,c,p) X(x+i, y+j, c).
Tensor conv_direct(const Tensor& input, const Tensor& filter);

/// One row per output position (x-major), one column per filter coordinate
/// ordered channel, kernel row, kernel column.
Matrix im2col(const Tensor& input, std::size_t kernel);

/// Column index of filter coordinate (i, j, c) in an im2col row.
inline std::size_t im2col_column(std::size_t i, std::size_t j, std::size_t c,
                                 std::size_t kernel) {
  return (c * kernel + i) * kernel + j;
}

/// The layer's filter as a dense F[r, r, C, P] tensor (via expand_dense).
Tensor filter_tensor(const ConvLayer& layer);

Tensor conv_forward(const ConvLayer& layer, const Tensor& input);

struct ConvGradients {
  std::vector<double> filter;  // first-vector layout
  std::vector<double> bias;
  Tensor input;                // empty when not requested
};

ConvGradients conv_backward(const ConvLayer& layer, const Tensor& input,
                            const Tensor& grad_out, bool want_input = true);
ConvGradients conv_backward(const ConvLayer& layer, const Tensor& input,
                            const Tensor& output, const Tensor& grad_out,
                            bool want_input);

// ---------------------------------------------------------------------------
// Prior pooling: area-weighted average resampling of X[W, H, C] to
// X[out_w, out_h, C]. Integer ratios reduce to plain block averaging.

struct PoolLayer {
  std::size_t in_w = 0;
  std::size_t in_h = 0;
  std::size_t channels = 1;
  std::size_t out_w = 0;
  std::size_t out_h = 0;
};

Tensor average_pool(const Tensor& input, std::size_t out_w, std::size_t out_h);
Tensor average_pool_backward(const Tensor& grad_out, std::size_t in_w, std::size_t in_h);

}  // namespace bcnn
