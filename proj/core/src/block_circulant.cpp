#include "bcnn/block_circulant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bcnn/error.hpp"

namespace bcnn {

PartitionScheme partition(std::size_t m, std::size_t n, std::size_t k) {
  if (m == 0 || n == 0) {
    throw Error(ErrorKind::InvalidArgument, "partition: dimensions must be positive");
  }
  if (!is_power_of_two(k)) {
    throw Error(ErrorKind::InvalidArgument,
                "partition: block size " + std::to_string(k) + " is not a power of two");
  }
  PartitionScheme s;
  s.m = m;
  s.n = n;
  s.k = k;
  s.p = (m + k - 1) / k;
  s.q = (n + k - 1) / k;
  s.pad_rows = s.p * k - m;
  s.pad_cols = s.q * k - n;
  return s;
}

// ---------------------------------------------------------------------------
// BlockVector

BlockVector::BlockVector(std::size_t num_blocks, std::size_t k, std::size_t logical_len)
    : data_(num_blocks * k, 0.0), k_(k), blocks_(num_blocks), logical_(logical_len) {
  if (logical_len > num_blocks * k) {
    throw Error(ErrorKind::ShapeMismatch, "BlockVector: logical length " +
                                              std::to_string(logical_len) +
                                              " exceeds padded length " +
                                              std::to_string(num_blocks * k));
  }
}

BlockVector BlockVector::from_logical(std::span<const double> values, std::size_t k,
                                      std::size_t num_blocks) {
  BlockVector v(num_blocks, k, values.size());
  std::copy(values.begin(), values.end(), v.data_.begin());
  return v;
}

void BlockVector::clear_padding() {
  std::fill(data_.begin() + static_cast<std::ptrdiff_t>(logical_), data_.end(), 0.0);
}

// ---------------------------------------------------------------------------
// BlockCirculantMatrix

BlockCirculantMatrix::BlockCirculantMatrix(PartitionScheme scheme,
                                           std::vector<double> first_vectors,
                                           bool cache_spectra)
    : scheme_(scheme), weights_(std::move(first_vectors)) {
  if (weights_.size() != scheme_.num_weights()) {
    throw Error(ErrorKind::ShapeMismatch,
                "BlockCirculantMatrix: got " + std::to_string(weights_.size()) +
                    " first-vector entries, scheme needs " +
                    std::to_string(scheme_.num_weights()));
  }
  if (cache_spectra) {
    warm();
  }
}

BlockCirculantMatrix BlockCirculantMatrix::zeros(PartitionScheme scheme, bool cache_spectra) {
  return {scheme, std::vector<double>(scheme.num_weights(), 0.0), cache_spectra};
}

BlockCirculantMatrix BlockCirculantMatrix::random(PartitionScheme scheme,
                                                  std::mt19937_64& rng,
                                                  bool cache_spectra) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(scheme.n));
  std::uniform_real_distribution<double> dist(-bound, bound);
  const std::vector<bool> active = active_weight_mask(scheme);
  std::vector<double> w(scheme.num_weights());
  for (std::size_t t = 0; t < w.size(); ++t) {
    const double v = dist(rng);
    w[t] = active[t] ? v : 0.0;
  }
  return {scheme, std::move(w), cache_spectra};
}

std::vector<bool> active_weight_mask(const PartitionScheme& scheme) {
  const std::size_t k = scheme.k;
  std::vector<bool> mask(scheme.num_weights(), false);
  for (std::size_t i = 0; i < scheme.p; ++i) {
    const std::size_t rows = std::min(k, scheme.m - i * k);
    for (std::size_t j = 0; j < scheme.q; ++j) {
      const std::size_t cols = std::min(k, scheme.n - j * k);
      const std::size_t base = (i * scheme.q + j) * k;
      // C[a][b] = w[(a - b) mod k] with a < rows, b < cols.
      for (std::size_t d = 0; d < rows; ++d) mask[base + d] = true;
      for (std::size_t d = k - cols + 1; d < k; ++d) mask[base + d] = true;
    }
  }
  return mask;
}

std::span<const double> BlockCirculantMatrix::first_vector(std::size_t i,
                                                           std::size_t j) const {
  return {weights_.data() + (i * scheme_.q + j) * scheme_.k, scheme_.k};
}

std::span<const Complex> BlockCirculantMatrix::cached_spectrum(std::size_t i,
                                                               std::size_t j) const {
  if (!cached_) {
    throw Error(ErrorKind::InvalidArgument, "cached_spectrum: cache not built");
  }
  const std::size_t bins = scheme_.bins();
  return {spectra_.data() + (i * scheme_.q + j) * bins, bins};
}

void BlockCirculantMatrix::warm() {
  cached_ = true;
  rebuild_cache();
}

void BlockCirculantMatrix::drop_cache() {
  cached_ = false;
  spectra_.clear();
  spectra_.shrink_to_fit();
}

void BlockCirculantMatrix::assign(std::vector<double> first_vectors) {
  if (first_vectors.size() != weights_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "assign: first-vector count mismatch");
  }
  weights_ = std::move(first_vectors);
  if (cached_) {
    rebuild_cache();
  }
}

void BlockCirculantMatrix::add_scaled(std::span<const double> delta, double scale) {
  if (delta.size() != weights_.size()) {
    throw Error(ErrorKind::ShapeMismatch, "add_scaled: first-vector count mismatch");
  }
  for (std::size_t t = 0; t < weights_.size(); ++t) {
    weights_[t] += scale * delta[t];
  }
  if (cached_) {
    rebuild_cache();
  }
}

void BlockCirculantMatrix::rebuild_cache() {
  const std::size_t blocks = scheme_.p * scheme_.q;
  const std::size_t bins = scheme_.bins();
  spectra_.resize(blocks * bins);
  for (std::size_t b = 0; b < blocks; ++b) {
    rfft_into(std::span<const double>(weights_.data() + b * scheme_.k, scheme_.k),
              std::span<Complex>(spectra_.data() + b * bins, bins));
  }
}

// ---------------------------------------------------------------------------
// Products

namespace {

void check_input(const PartitionScheme& s, const BlockVector& x, std::size_t blocks,
                 const char* what) {
  if (x.num_blocks() != blocks || x.block_size() != s.k) {
    throw Error(ErrorKind::ShapeMismatch,
                std::string(what) + ": expected " + std::to_string(blocks) +
                    " blocks of length " + std::to_string(s.k) + ", got " +
                    std::to_string(x.num_blocks()) + " of length " +
                    std::to_string(x.block_size()));
  }
}

void count_group(OpCounter* counter, std::size_t k) {
  if (counter != nullptr) {
    const TransformCost c = eltwise_group_cost(k);
    ++counter->eltwise_groups;
    counter->real_mults += c.mults;
    counter->real_adds += c.adds;
  }
}

// acc += a o b, or acc += conj(a) o b when conjugate_a is set.
void multiply_accumulate(std::span<Complex> acc, std::span<const Complex> a,
                         std::span<const Complex> b, bool conjugate_a) {
  const std::size_t bins = acc.size();
  acc[0] += Complex{a[0].real() * b[0].real(), 0.0};
  std::size_t last = bins;
  if (bins > 1) {
    last = bins - 1;
    acc[last] += Complex{a[last].real() * b[last].real(), 0.0};
  }
  const double sign = conjugate_a ? -1.0 : 1.0;
  for (std::size_t t = 1; t < last; ++t) {
    const double ar = a[t].real();
    const double ai = sign * a[t].imag();
    const double br = b[t].real();
    const double bi = b[t].imag();
    acc[t] += Complex{ar * br - ai * bi, ar * bi + ai * br};
  }
}

// Weight spectra come from the cache when present, otherwise they are
// transformed here (and counted).
class WeightSpectra {
 public:
  WeightSpectra(const BlockCirculantMatrix& w, OpCounter* counter) : w_(w) {
    if (!w.has_cached_spectra()) {
      const auto& s = w.scheme();
      local_.resize(s.p * s.q * s.bins());
      for (std::size_t i = 0; i < s.p; ++i) {
        for (std::size_t j = 0; j < s.q; ++j) {
          rfft_into(w.first_vector(i, j), slot(i, j), counter);
        }
      }
    }
  }

  std::span<const Complex> operator()(std::size_t i, std::size_t j) const {
    if (w_.has_cached_spectra()) {
      return w_.cached_spectrum(i, j);
    }
    const auto& s = w_.scheme();
    return {local_.data() + (i * s.q + j) * s.bins(), s.bins()};
  }

 private:
  std::span<Complex> slot(std::size_t i, std::size_t j) {
    const auto& s = w_.scheme();
    return {local_.data() + (i * s.q + j) * s.bins(), s.bins()};
  }

  const BlockCirculantMatrix& w_;
  ComplexVec local_;
};

ComplexVec transform_blocks(const BlockVector& v, OpCounter* counter) {
  const std::size_t k = v.block_size();
  const std::size_t bins = half_spectrum_size(k);
  ComplexVec out(v.num_blocks() * bins);
  for (std::size_t j = 0; j < v.num_blocks(); ++j) {
    rfft_into(v.block(j), std::span<Complex>(out.data() + j * bins, bins), counter);
  }
  return out;
}

}  // namespace

TransformCost eltwise_group_cost(std::size_t k) {
  if (k == 1) {
    return {1, 1};
  }
  const std::uint64_t complex_bins = k / 2 - 1;
  return {2 + 4 * complex_bins, 2 + 4 * complex_bins};
}

Matrix expand_dense(const BlockCirculantMatrix& w) {
  const auto& s = w.scheme();
  Matrix dense(s.m, s.n);
  for (std::size_t r = 0; r < s.m; ++r) {
    const std::size_t i = r / s.k;
    const std::size_t a = r % s.k;
    for (std::size_t c = 0; c < s.n; ++c) {
      const std::size_t j = c / s.k;
      const std::size_t b = c % s.k;
      dense(r, c) = w.first_vector(i, j)[(a + s.k - b) % s.k];
    }
  }
  return dense;
}

BlockVector matvec(const BlockCirculantMatrix& w, const BlockVector& x,
                   OpCounter* counter) {
  const auto& s = w.scheme();
  check_input(s, x, s.q, "matvec");
  const std::size_t bins = s.bins();
  const WeightSpectra weights(w, counter);

  // Phase 1: one transform per input block, shared by every output block.
  const ComplexVec xs = transform_blocks(x, counter);

  // Phase 2 and 3: accumulate in the frequency domain, one inverse per row.
  BlockVector out(s.p, s.k, s.m);
  ComplexVec acc(bins);
  for (std::size_t i = 0; i < s.p; ++i) {
    std::fill(acc.begin(), acc.end(), Complex{});
    for (std::size_t j = 0; j < s.q; ++j) {
      multiply_accumulate(acc, weights(i, j),
                          std::span<const Complex>(xs.data() + j * bins, bins), false);
      count_group(counter, s.k);
    }
    irfft_into(acc, out.block(i), counter);
  }
  out.clear_padding();
  return out;
}

BlockVector matvec_naive(const BlockCirculantMatrix& w, const BlockVector& x,
                         OpCounter* counter) {
  const auto& s = w.scheme();
  check_input(s, x, s.q, "matvec_naive");
  const std::size_t bins = s.bins();
  const WeightSpectra weights(w, counter);

  BlockVector out(s.p, s.k, s.m);
  ComplexVec xs(bins);
  ComplexVec prod(bins);
  std::vector<double> partial(s.k);
  for (std::size_t i = 0; i < s.p; ++i) {
    auto dst = out.block(i);
    for (std::size_t j = 0; j < s.q; ++j) {
      rfft_into(x.block(j), xs, counter);
      std::fill(prod.begin(), prod.end(), Complex{});
      multiply_accumulate(prod, weights(i, j), xs, false);
      count_group(counter, s.k);
      irfft_into(prod, partial, counter);
      for (std::size_t t = 0; t < s.k; ++t) {
        dst[t] += partial[t];
      }
      if (counter != nullptr) {
        counter->real_adds += s.k;
      }
    }
  }
  out.clear_padding();
  return out;
}

BlockGradients backward(const BlockCirculantMatrix& w, const BlockVector& x,
                        const BlockVector& grad_out, bool want_input,
                        OpCounter* counter) {
  const auto& s = w.scheme();
  check_input(s, x, s.q, "backward (input)");
  check_input(s, grad_out, s.p, "backward (output gradient)");
  const std::size_t bins = s.bins();

  const ComplexVec xs = transform_blocks(x, counter);
  const ComplexVec gs = transform_blocks(grad_out, counter);
  auto spectrum = [bins](const ComplexVec& v, std::size_t b) {
    return std::span<const Complex>(v.data() + b * bins, bins);
  };

  BlockGradients grads;
  grads.weights.assign(s.num_weights(), 0.0);
  ComplexVec acc(bins);
  for (std::size_t i = 0; i < s.p; ++i) {
    for (std::size_t j = 0; j < s.q; ++j) {
      std::fill(acc.begin(), acc.end(), Complex{});
      multiply_accumulate(acc, spectrum(xs, j), spectrum(gs, i), true);
      count_group(counter, s.k);
      irfft_into(acc, std::span<double>(grads.weights.data() + (i * s.q + j) * s.k, s.k),
                 counter);
    }
  }

  if (want_input) {
    const WeightSpectra weights(w, counter);
    grads.input = BlockVector(s.q, s.k, s.n);
    for (std::size_t j = 0; j < s.q; ++j) {
      std::fill(acc.begin(), acc.end(), Complex{});
      for (std::size_t i = 0; i < s.p; ++i) {
        multiply_accumulate(acc, weights(i, j), spectrum(gs, i), true);
        count_group(counter, s.k);
      }
      irfft_into(acc, grads.input.block(j), counter);
    }
    grads.input.clear_padding();
  }
  return grads;
}

std::vector<double> grad_weights(const BlockCirculantMatrix& w, const BlockVector& x,
                                 const BlockVector& grad_out, OpCounter* counter) {
  return backward(w, x, grad_out, false, counter).weights;
}

BlockVector grad_input(const BlockCirculantMatrix& w, const BlockVector& grad_out,
                       OpCounter* counter) {
  const auto& s = w.scheme();
  check_input(s, grad_out, s.p, "grad_input");
  const std::size_t bins = s.bins();
  const WeightSpectra weights(w, counter);
  const ComplexVec gs = transform_blocks(grad_out, counter);

  BlockVector dx(s.q, s.k, s.n);
  ComplexVec acc(bins);
  for (std::size_t j = 0; j < s.q; ++j) {
    std::fill(acc.begin(), acc.end(), Complex{});
    for (std::size_t i = 0; i < s.p; ++i) {
      multiply_accumulate(acc, weights(i, j),
                          std::span<const Complex>(gs.data() + i * bins, bins), true);
      count_group(counter, s.k);
    }
    irfft_into(acc, dx.block(j), counter);
  }
  dx.clear_padding();
  return dx;
}

// ---------------------------------------------------------------------------

StorageReport storage_report(const PartitionScheme& scheme, unsigned bits_per_weight) {
  if (bits_per_weight == 0 || bits_per_weight > 64) {
    throw Error(ErrorKind::InvalidArgument, "storage_report: bits per weight must be in [1, 64]");
  }
  StorageReport r;
  r.dense_params = scheme.m * scheme.n;
  r.compressed_params = scheme.num_weights();
  const auto mask = active_weight_mask(scheme);
  r.active_params = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  r.spectral_values = scheme.p * scheme.q * scheme.bins();
  r.bits_per_weight = bits_per_weight;
  r.parameter_ratio =
      static_cast<double>(r.dense_params) / static_cast<double>(r.compressed_params);
  r.quantization_factor = 64.0 / static_cast<double>(bits_per_weight);
  r.combined_ratio = r.parameter_ratio * r.quantization_factor;
  r.dense_bytes = static_cast<double>(r.dense_params) * 8.0;
  r.compressed_bytes =
      static_cast<double>(r.compressed_params) * static_cast<double>(bits_per_weight) / 8.0;
  return r;
}

StorageReport storage_report(const BlockCirculantMatrix& w, unsigned bits_per_weight) {
  return storage_report(w.scheme(), bits_per_weight);
}

}  // namespace bcnn
