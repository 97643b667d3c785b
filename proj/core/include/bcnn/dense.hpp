#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace bcnn {

/// Row-major dense matrix. Used as the reference baseline for every fast
/// path and as the im2col operand.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
};

// y = A x
std::vector<double> dense_matvec(const Matrix& a, std::span<const double> x);
// y = A^T x
std::vector<double> dense_transpose_matvec(const Matrix& a, std::span<const double> x);
Matrix dense_matmul(const Matrix& a, const Matrix& b);

}  // namespace bcnn
