#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "bcnn/dense.hpp"
#include "bcnn/fft.hpp"

namespace bcnn {

/// How an m x n matrix is tiled into k x k circulant blocks. Rows and columns
/// are zero-padded up to p*k and q*k.
struct PartitionScheme {
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t k = 1;
  std::size_t p = 0;
  std::size_t q = 0;
  std::size_t pad_rows = 0;
  std::size_t pad_cols = 0;

  std::size_t padded_rows() const { return p * k; }
  std::size_t padded_cols() const { return q * k; }
  std::size_t num_weights() const { return p * q * k; }
  std::size_t bins() const { return half_spectrum_size(k); }

  friend bool operator==(const PartitionScheme&, const PartitionScheme&) = default;
};

/// Throws Error(InvalidArgument) for zero dimensions or a block size that is
/// not a power of two.
PartitionScheme partition(std::size_t m, std::size_t n, std::size_t k);

/// A vector split into equal length-k blocks. Entries past logical_len are
/// padding and are kept at zero by every operation that produces one.
class BlockVector {
 public:
  BlockVector() = default;
  BlockVector(std::size_t num_blocks, std::size_t k, std::size_t logical_len);

  static BlockVector from_logical(std::span<const double> values, std::size_t k,
                                  std::size_t num_blocks);

  std::size_t num_blocks() const { return blocks_; }
  std::size_t block_size() const { return k_; }
  std::size_t logical_len() const { return logical_; }

  std::span<const double> block(std::size_t j) const { return {data_.data() + j * k_, k_}; }
  std::span<double> block(std::size_t j) { return {data_.data() + j * k_, k_}; }
  std::span<const double> padded() const { return data_; }
  std::span<const double> logical() const { return {data_.data(), logical_}; }
  std::span<double> logical() { return {data_.data(), logical_}; }

  void clear_padding();

 private:
  std::vector<double> data_;
  std::size_t k_ = 1;
  std::size_t blocks_ = 0;
  std::size_t logical_ = 0;
};

/// W = [C_ij], each C_ij a k x k circulant block with C_ij[a][b] =
/// w_ij[(a - b) mod k]. Only the p*q defining vectors are stored; their
/// half-spectra are optionally cached so products skip the weight FFTs.
///
/// Mutators (assign, add_scaled) keep the spectrum cache coherent. All const
/// members are safe to call concurrently.
class BlockCirculantMatrix {
 public:
  BlockCirculantMatrix() = default;
  BlockCirculantMatrix(PartitionScheme scheme, std::vector<double> first_vectors,
                       bool cache_spectra = true);

  static BlockCirculantMatrix zeros(PartitionScheme scheme, bool cache_spectra = true);
  /// Entries drawn uniformly from [-1/sqrt(n), 1/sqrt(n)].
  static BlockCirculantMatrix random(PartitionScheme scheme, std::mt19937_64& rng,
                                     bool cache_spectra = true);

  const PartitionScheme& scheme() const { return scheme_; }
  std::span<const double> first_vectors() const { return weights_; }
  std::span<const double> first_vector(std::size_t i, std::size_t j) const;

  bool has_cached_spectra() const { return cached_; }
  std::span<const Complex> cached_spectrum(std::size_t i, std::size_t j) const;

  void warm();
  void drop_cache();
  void assign(std::vector<double> first_vectors);
  /// w += scale * delta
  void add_scaled(std::span<const double> delta, double scale);

 private:
  void rebuild_cache();

  PartitionScheme scheme_;
  std::vector<double> weights_;   // (i * q + j) * k
  ComplexVec spectra_;            // (i * q + j) * bins
  bool cached_ = false;
};

/// True for first-vector entries that reach the logical m x n matrix. The
/// rest only ever multiply padding; they start at zero and receive zero
/// gradient.
std::vector<bool> active_weight_mask(const PartitionScheme& scheme);

/// Dense m x n matrix with the circulant index pattern spelled out. The
/// reference every fast path is checked against.
Matrix expand_dense(const BlockCirculantMatrix& w);

/// a_i = IFFT(sum_j FFT(w_ij) o FFT(x_j)). With cached weight spectra this
/// runs exactly q forward and p inverse transforms.
BlockVector matvec(const BlockCirculantMatrix& w, const BlockVector& x,
                   OpCounter* counter = nullptr);

/// Per-block IFFT(FFT(w_ij) o FFT(x_j)) summed in the time domain: p*q
/// forward and p*q inverse transforms. Kept as the undecoupled baseline.
BlockVector matvec_naive(const BlockCirculantMatrix& w, const BlockVector& x,
                         OpCounter* counter = nullptr);

/// dL/dw_ij = IFFT(conj(FFT(x_j)) o FFT(dL/da_i)); flat in first_vectors order.
std::vector<double> grad_weights(const BlockCirculantMatrix& w, const BlockVector& x,
                                 const BlockVector& grad_out,
                                 OpCounter* counter = nullptr);

/// dL/dx_j = IFFT(sum_i conj(FFT(w_ij)) o FFT(dL/da_i)), i.e. W^T dL/da.
BlockVector grad_input(const BlockCirculantMatrix& w, const BlockVector& grad_out,
                       OpCounter* counter = nullptr);

struct BlockGradients {
  std::vector<double> weights;
  BlockVector input;  // empty when not requested
};

/// Both gradients sharing the transform of dL/da.
BlockGradients backward(const BlockCirculantMatrix& w, const BlockVector& x,
                        const BlockVector& grad_out, bool want_input,
                        OpCounter* counter = nullptr);

struct StorageReport {
  std::size_t dense_params = 0;       // m * n
  std::size_t compressed_params = 0;  // p * q * k
  std::size_t active_params = 0;      // excludes entries that only touch padding
  std::size_t spectral_values = 0;    // p * q * (k/2 + 1) complex
  unsigned bits_per_weight = 64;
  double parameter_ratio = 1.0;       // dense / compressed
  double quantization_factor = 1.0;   // 64 / bits
  double combined_ratio = 1.0;
  double dense_bytes = 0.0;           // 64-bit reference
  double compressed_bytes = 0.0;
};

StorageReport storage_report(const PartitionScheme& scheme, unsigned bits_per_weight = 64);
StorageReport storage_report(const BlockCirculantMatrix& w, unsigned bits_per_weight = 64);

/// Real multiply/add cost of one spectrum product-accumulate. DC and Nyquist
/// bins are real and take one multiply each.
TransformCost eltwise_group_cost(std::size_t k);

}  // namespace bcnn
