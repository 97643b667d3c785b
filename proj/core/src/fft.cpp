#include "bcnn/fft.hpp"

#include <bit>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <unordered_map>

#include "bcnn/error.hpp"

namespace bcnn {

OpCounter& OpCounter::operator+=(const OpCounter& other) {
  fft += other.fft;
  ifft += other.ifft;
  eltwise_groups += other.eltwise_groups;
  real_mults += other.real_mults;
  real_adds += other.real_adds;
  return *this;
}

namespace {

struct Plan {
  std::vector<std::uint32_t> bitrev;
  ComplexVec twiddles;  // exp(-2 pi i j / n), j < n/2
};

Plan make_plan(std::size_t n) {
  Plan plan;
  const auto bits = static_cast<unsigned>(std::countr_zero(n));
  plan.bitrev.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (unsigned b = 0; b < bits; ++b) {
      r |= ((i >> b) & 1U) << (bits - 1 - b);
    }
    plan.bitrev[i] = static_cast<std::uint32_t>(r);
  }
  plan.twiddles.resize(n / 2);
  for (std::size_t j = 0; j < n / 2; ++j) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) /
                         static_cast<double>(n);
    plan.twiddles[j] = {std::cos(angle), std::sin(angle)};
  }
  return plan;
}

// Plans are cached per thread; the public functions stay free of shared
// mutable state.
const Plan& plan_for(std::size_t n) {
  thread_local std::unordered_map<std::size_t, std::unique_ptr<Plan>> cache;
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<Plan>(make_plan(n));
  }
  return *slot;
}

void require_power_of_two(std::size_t n, const char* what) {
  if (!is_power_of_two(n)) {
    throw Error(ErrorKind::InvalidLength,
                std::string(what) + ": invalid length " + std::to_string(n) +
                    " (must be a power of two)");
  }
}

inline Complex mul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(),
          a.real() * b.imag() + a.imag() * b.real()};
}

std::uint64_t log2_of(std::size_t n) {
  return static_cast<std::uint64_t>(std::countr_zero(n));
}

// Iterative radix-2 decimation in time: bit-reversal permutation followed by
// log2(n) butterfly stages.
void butterfly_network(std::span<Complex> x, OpCounter* counter) {
  const std::size_t n = x.size();
  if (n <= 1) {
    return;
  }
  const Plan& plan = plan_for(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = plan.bitrev[i];
    if (j > i) {
      std::swap(x[i], x[j]);
    }
  }
  for (std::size_t len = 2; len <= n; len <<= 1U) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t base = 0; base < n; base += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const Complex even = x[base + j];
        const Complex odd = mul(x[base + j + half], plan.twiddles[j * stride]);
        x[base + j] = even + odd;
        x[base + j + half] = even - odd;
      }
    }
  }
  if (counter != nullptr) {
    const TransformCost cost = complex_fft_cost(n);
    counter->real_mults += cost.mults;
    counter->real_adds += cost.adds;
  }
}

void conjugate(std::span<Complex> x) {
  for (auto& v : x) {
    v = std::conj(v);
  }
}

}  // namespace

TransformCost complex_fft_cost(std::size_t n) {
  if (n <= 1) {
    return {};
  }
  // n/2 butterflies per stage, each one complex multiply (4 mul, 2 add) and
  // two complex additions.
  return {2 * n * log2_of(n), 3 * n * log2_of(n)};
}

TransformCost rfft_cost(std::size_t k) {
  if (k <= 1) {
    return {};
  }
  const std::size_t half = k / 2;
  TransformCost cost = complex_fft_cost(half);
  cost.mults += 8 * (half + 1);
  cost.adds += 8 * (half + 1);
  return cost;
}

TransformCost irfft_cost(std::size_t k) {
  if (k <= 1) {
    return {};
  }
  const std::size_t half = k / 2;
  TransformCost cost = complex_fft_cost(half);
  cost.mults += 8 * half + 2 * half;  // unpacking, then the 1/half scale
  cost.adds += 8 * half;
  return cost;
}

void fft_inplace(std::span<Complex> v, OpCounter* counter) {
  require_power_of_two(v.size(), "fft");
  butterfly_network(v, counter);
  if (counter != nullptr) {
    ++counter->fft;
  }
}

void ifft_inplace(std::span<Complex> v, OpCounter* counter) {
  require_power_of_two(v.size(), "ifft");
  conjugate(v);
  butterfly_network(v, counter);
  const double scale = 1.0 / static_cast<double>(v.size());
  for (auto& x : v) {
    x = {x.real() * scale, -x.imag() * scale};
  }
  if (counter != nullptr) {
    ++counter->ifft;
    counter->real_mults += 2 * v.size();
  }
}

ComplexVec fft(std::span<const Complex> v) {
  ComplexVec out(v.begin(), v.end());
  fft_inplace(out);
  return out;
}

ComplexVec ifft(std::span<const Complex> v) {
  ComplexVec out(v.begin(), v.end());
  ifft_inplace(out);
  return out;
}

ComplexVec Spectrum::expand() const {
  ComplexVec full(original_len);
  for (std::size_t m = 0; m < original_len; ++m) {
    full[m] = m < bins.size() ? bins[m] : std::conj(bins[original_len - m]);
  }
  return full;
}

// A length-k real vector is packed into a length-k/2 complex vector
// z[t] = v[2t] + i v[2t+1]; one half-size transform plus an O(k) unpacking
// step yields the half-spectrum.
void rfft_into(std::span<const double> v, std::span<Complex> bins,
               OpCounter* counter) {
  const std::size_t k = v.size();
  require_power_of_two(k, "rfft");
  if (bins.size() != half_spectrum_size(k)) {
    throw Error(ErrorKind::ShapeMismatch, "rfft: output holds " +
                                              std::to_string(bins.size()) +
                                              " bins, expected " +
                                              std::to_string(half_spectrum_size(k)));
  }
  if (counter != nullptr) {
    ++counter->fft;
  }
  if (k == 1) {
    bins[0] = {v[0], 0.0};
    return;
  }
  const std::size_t half = k / 2;
  thread_local ComplexVec packed;
  packed.resize(half);
  for (std::size_t t = 0; t < half; ++t) {
    packed[t] = {v[2 * t], v[2 * t + 1]};
  }
  butterfly_network(packed, counter);

  const Plan& plan = plan_for(k);
  for (std::size_t m = 0; m <= half; ++m) {
    const Complex zm = packed[m % half];
    const Complex zc = std::conj(packed[(half - m) % half]);
    const Complex sum = zm + zc;
    const Complex diff = zm - zc;
    const Complex even{0.5 * sum.real(), 0.5 * sum.imag()};
    const Complex odd{0.5 * diff.imag(), -0.5 * diff.real()};  // diff / 2i
    const Complex tw = m < half ? plan.twiddles[m] : Complex{-1.0, 0.0};
    bins[m] = even + mul(tw, odd);
  }
  bins[0].imag(0.0);
  bins[half].imag(0.0);
  if (counter != nullptr) {
    counter->real_mults += 8 * (half + 1);
    counter->real_adds += 8 * (half + 1);
  }
}

void irfft_into(std::span<const Complex> bins, std::span<double> out,
                OpCounter* counter) {
  const std::size_t k = out.size();
  require_power_of_two(k, "irfft");
  if (bins.size() != half_spectrum_size(k)) {
    throw Error(ErrorKind::ShapeMismatch, "irfft: spectrum holds " +
                                              std::to_string(bins.size()) +
                                              " bins, expected " +
                                              std::to_string(half_spectrum_size(k)));
  }
  double scale = 1.0;
  for (const auto& b : bins) {
    scale = std::max(scale, std::abs(b.real()));
    scale = std::max(scale, std::abs(b.imag()));
  }
  const double tol = 1e-9 * scale;
  if (std::abs(bins.front().imag()) > tol ||
      (k % 2 == 0 && std::abs(bins.back().imag()) > tol)) {
    throw Error(ErrorKind::InvalidArgument,
                "irfft: spectrum is not conjugate-symmetric (DC or Nyquist "
                "bin has a nonzero imaginary part)");
  }
  if (counter != nullptr) {
    ++counter->ifft;
  }
  if (k == 1) {
    out[0] = bins[0].real();
    return;
  }
  const std::size_t half = k / 2;
  const Plan& plan = plan_for(k);
  thread_local ComplexVec packed;
  packed.resize(half);
  for (std::size_t m = 0; m < half; ++m) {
    const Complex xm{bins[m].real(), m == 0 ? 0.0 : bins[m].imag()};
    const Complex xc = m == 0 ? Complex{bins[half].real(), 0.0}
                              : std::conj(bins[half - m]);
    const Complex sum = xm + xc;
    const Complex diff = mul(xm - xc, std::conj(plan.twiddles[m]));
    const Complex even{0.5 * sum.real(), 0.5 * sum.imag()};
    const Complex odd{0.5 * diff.real(), 0.5 * diff.imag()};
    packed[m] = {even.real() - odd.imag(), even.imag() + odd.real()};  // even + i*odd
  }
  // Inverse of the half-size transform through the same butterfly network.
  conjugate(packed);
  butterfly_network(packed, counter);
  const double inv = 1.0 / static_cast<double>(half);
  for (std::size_t t = 0; t < half; ++t) {
    out[2 * t] = packed[t].real() * inv;
    out[2 * t + 1] = -packed[t].imag() * inv;
  }
  if (counter != nullptr) {
    counter->real_mults += 8 * half + 2 * half;
    counter->real_adds += 8 * half;
  }
}

Spectrum rfft(std::span<const double> v, std::size_t k) {
  if (v.size() != k) {
    throw Error(ErrorKind::InvalidLength,
                "rfft: length mismatch, got " + std::to_string(v.size()) +
                    " values for k=" + std::to_string(k));
  }
  require_power_of_two(k, "rfft");
  Spectrum s;
  s.original_len = k;
  s.bins.resize(half_spectrum_size(k));
  rfft_into(v, s.bins);
  return s;
}

std::vector<double> irfft(const Spectrum& s) {
  std::vector<double> out(s.original_len);
  irfft_into(s.bins, out);
  return out;
}

}  // namespace bcnn
