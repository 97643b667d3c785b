#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bcnn/network.hpp"

namespace bcnn {

/// Labelled samples stored back to back.
struct Dataset {
  InputShape shape;
  std::size_t classes = 10;
  std::vector<double> inputs;  // size() * shape.size()
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return shape.size(); }
  std::span<const double> sample(std::size_t i) const {
    return {inputs.data() + i * dim(), dim()};
  }
  /// First `count` samples (or all of them when count exceeds size()).
  Dataset head(std::size_t count) const;
};

// IDX: big-endian magic (2051 images, 2049 labels), big-endian u32 extents,
// then raw unsigned bytes.
struct IdxImages {
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);

struct PoolTarget {
  std::size_t w = 16;
  std::size_t h = 16;
};

/// Pixels scaled to [0, 1]; optionally area-average pooled to pool->w x
/// pool->h (16 x 16 gives 256 inputs, 16 x 8 gives 128).
Dataset make_image_dataset(const IdxImages& images, std::span<const std::uint8_t> labels,
                           std::optional<PoolTarget> pool = std::nullopt);
Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path,
                   std::optional<PoolTarget> pool = std::nullopt);

/// Two-class XOR of the signs of the first two coordinates; the remaining
/// coordinates are small noise.
Dataset make_xor_dataset(std::size_t count, std::size_t dim, std::uint64_t seed);

}  // namespace bcnn
