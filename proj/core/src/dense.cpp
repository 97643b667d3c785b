#include "bcnn/dense.hpp"

#include <string>

#include "bcnn/error.hpp"

namespace bcnn {

std::vector<double> dense_matvec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.cols) {
    throw Error(ErrorKind::ShapeMismatch,
                "dense_matvec: vector length " + std::to_string(x.size()) +
                    " does not match " + std::to_string(a.cols) + " columns");
  }
  std::vector<double> y(a.rows, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* row = a.data.data() + r * a.cols;
    double acc = 0.0;
    for (std::size_t c = 0; c < a.cols; ++c) {
      acc += row[c] * x[c];
    }
    y[r] = acc;
  }
  return y;
}

std::vector<double> dense_transpose_matvec(const Matrix& a, std::span<const double> x) {
  if (x.size() != a.rows) {
    throw Error(ErrorKind::ShapeMismatch,
                "dense_transpose_matvec: vector length " + std::to_string(x.size()) +
                    " does not match " + std::to_string(a.rows) + " rows");
  }
  std::vector<double> y(a.cols, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* row = a.data.data() + r * a.cols;
    for (std::size_t c = 0; c < a.cols; ++c) {
      y[c] += row[c] * x[r];
    }
  }
  return y;
}

Matrix dense_matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    throw Error(ErrorKind::ShapeMismatch, "dense_matmul: inner dimensions differ");
  }
  Matrix out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t l = 0; l < a.cols; ++l) {
      const double v = a(i, l);
      for (std::size_t j = 0; j < b.cols; ++j) {
        out(i, j) += v * b(l, j);
      }
    }
  }
  return out;
}

}  // namespace bcnn
