#include "bcnn/tensor.hpp"

#include <functional>
#include <numeric>
#include <string>

#include "bcnn/error.hpp"

namespace bcnn {

namespace {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw Error(ErrorKind::ShapeMismatch,
                "Tensor: rank must be 1 to 4, got " + std::to_string(shape.size()));
  }
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), data_(element_count(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != element_count(shape_)) {
    throw Error(ErrorKind::ShapeMismatch, "Tensor: data holds " +
                                              std::to_string(data_.size()) +
                                              " values, shape needs " +
                                              std::to_string(element_count(shape_)));
  }
}

}  // namespace bcnn
