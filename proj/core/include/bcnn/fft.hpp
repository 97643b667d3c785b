#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bcnn {

using Complex = std::complex<double>;
using ComplexVec = std::vector<Complex>;

/// Instrumented operation counts. Callers own the counter and pass it down,
/// so counting never touches shared state.
struct OpCounter {
  std::uint64_t fft = 0;             // forward transforms issued
  std::uint64_t ifft = 0;            // inverse transforms issued
  std::uint64_t eltwise_groups = 0;  // spectrum-by-spectrum products
  std::uint64_t real_mults = 0;
  std::uint64_t real_adds = 0;

  OpCounter& operator+=(const OpCounter& other);
  friend bool operator==(const OpCounter&, const OpCounter&) = default;
};

/// Real multiply/add cost of one transform as executed by this library.
struct TransformCost {
  std::uint64_t mults = 0;
  std::uint64_t adds = 0;
};

constexpr bool is_power_of_two(std::size_t n) noexcept {
  return n != 0 && (n & (n - 1)) == 0;
}

/// Number of stored bins of a length-k real transform.
constexpr std::size_t half_spectrum_size(std::size_t k) noexcept {
  return k / 2 + 1;
}

// Unnormalized forward DFT, X[m] = sum_t v[t] exp(-2 pi i m t / n).
// Throws Error(InvalidLength) unless the length is a power of two.
ComplexVec fft(std::span<const Complex> v);
// Inverse DFT with the 1/n factor. Runs the forward kernel between two
// conjugations, so both directions share one butterfly network.
ComplexVec ifft(std::span<const Complex> v);

void fft_inplace(std::span<Complex> v, OpCounter* counter = nullptr);
void ifft_inplace(std::span<Complex> v, OpCounter* counter = nullptr);

/// Half-spectrum of a real vector: bins [0, k/2] of its DFT. The remaining
/// bins are conjugates, X[k - m] = conj(X[m]).
struct Spectrum {
  ComplexVec bins;
  std::size_t original_len = 0;

  /// Full length-k spectrum rebuilt through conjugate symmetry.
  ComplexVec expand() const;
};

Spectrum rfft(std::span<const double> v, std::size_t k);
std::vector<double> irfft(const Spectrum& s);

// Allocation-free variants used by the block-circulant kernels. `bins` must
// hold half_spectrum_size(v.size()) entries.
void rfft_into(std::span<const double> v, std::span<Complex> bins,
               OpCounter* counter = nullptr);
void irfft_into(std::span<const Complex> bins, std::span<double> out,
                OpCounter* counter = nullptr);

TransformCost complex_fft_cost(std::size_t n);
TransformCost rfft_cost(std::size_t k);
TransformCost irfft_cost(std::size_t k);

}  // namespace bcnn
