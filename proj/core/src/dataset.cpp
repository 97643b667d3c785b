#include "bcnn/dataset.hpp"

#include <fstream>
#include <iterator>
#include <random>

#include "bcnn/error.hpp"
#include "bcnn/layers.hpp"

namespace bcnn {

namespace {

constexpr std::uint32_t kImageMagic = 2051;
constexpr std::uint32_t kLabelMagic = 2049;

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Data, "cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset Dataset::head(std::size_t count) const {
  Dataset out;
  out.shape = shape;
  out.classes = classes;
  const std::size_t n = std::min(count, size());
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  out.inputs.assign(inputs.begin(), inputs.begin() + static_cast<std::ptrdiff_t>(n * dim()));
  return out;
}

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 16) {
    throw Error(ErrorKind::Data, "idx images: truncated header");
  }
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kImageMagic) {
    throw Error(ErrorKind::Data, "idx images: bad magic number " + std::to_string(magic) +
                                     " (expected 2051)");
  }
  IdxImages images;
  images.count = read_be32(bytes, 4);
  images.rows = read_be32(bytes, 8);
  images.cols = read_be32(bytes, 12);
  const std::size_t payload = images.count * images.rows * images.cols;
  if (bytes.size() - 16 < payload) {
    throw Error(ErrorKind::Data, "idx images: truncated file, header declares " +
                                     std::to_string(images.count) + " images");
  }
  images.pixels.assign(bytes.begin() + 16, bytes.begin() + 16 + static_cast<std::ptrdiff_t>(payload));
  return images;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) {
    throw Error(ErrorKind::Data, "idx labels: truncated header");
  }
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != kLabelMagic) {
    throw Error(ErrorKind::Data, "idx labels: bad magic number " + std::to_string(magic) +
                                     " (expected 2049)");
  }
  const std::size_t count = read_be32(bytes, 4);
  if (bytes.size() - 8 < count) {
    throw Error(ErrorKind::Data, "idx labels: truncated file, header declares " +
                                     std::to_string(count) + " labels");
  }
  return {bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

IdxImages read_idx_images(const std::filesystem::path& path) {
  return parse_idx_images(slurp(path));
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  return parse_idx_labels(slurp(path));
}

Dataset make_image_dataset(const IdxImages& images, std::span<const std::uint8_t> labels,
                           std::optional<PoolTarget> pool) {
  if (images.count != labels.size()) {
    throw Error(ErrorKind::Data, "mnist: " + std::to_string(images.count) + " images but " +
                                     std::to_string(labels.size()) + " labels");
  }
  Dataset ds;
  ds.classes = 10;
  ds.shape = pool ? InputShape{pool->w, pool->h, 1} : InputShape{images.rows, images.cols, 1};
  ds.labels.reserve(images.count);
  ds.inputs.reserve(images.count * ds.dim());
  const std::size_t pixels = images.rows * images.cols;
  for (std::size_t i = 0; i < images.count; ++i) {
    if (labels[i] > 9) {
      throw Error(ErrorKind::Data, "mnist: label " + std::to_string(labels[i]) +
                                       " at index " + std::to_string(i) + " outside 0-9");
    }
    ds.labels.push_back(labels[i]);
    std::vector<double> img(pixels);
    for (std::size_t t = 0; t < pixels; ++t) {
      img[t] = static_cast<double>(images.pixels[i * pixels + t]) / 255.0;
    }
    if (pool) {
      const Tensor pooled =
          average_pool(Tensor({images.rows, images.cols, 1}, std::move(img)), pool->w, pool->h);
      ds.inputs.insert(ds.inputs.end(), pooled.data().begin(), pooled.data().end());
    } else {
      ds.inputs.insert(ds.inputs.end(), img.begin(), img.end());
    }
  }
  return ds;
}

Dataset load_mnist(const std::filesystem::path& images_path,
                   const std::filesystem::path& labels_path, std::optional<PoolTarget> pool) {
  const IdxImages images = read_idx_images(images_path);
  const std::vector<std::uint8_t> labels = read_idx_labels(labels_path);
  return make_image_dataset(images, labels, pool);
}

Dataset make_xor_dataset(std::size_t count, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) {
    throw Error(ErrorKind::InvalidArgument, "xor dataset needs at least two inputs");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::normal_distribution<double> jitter(0.0, 0.1);
  Dataset ds;
  ds.shape = {dim, 1, 1};
  ds.classes = 2;
  for (std::size_t i = 0; i < count; ++i) {
    const bool a = coin(rng);
    const bool b = coin(rng);
    ds.inputs.push_back((a ? 1.0 : -1.0) + jitter(rng));
    ds.inputs.push_back((b ? 1.0 : -1.0) + jitter(rng));
    for (std::size_t t = 2; t < dim; ++t) {
      ds.inputs.push_back(jitter(rng));
    }
    ds.labels.push_back(a != b ? 1 : 0);
  }
  return ds;
}

}  // namespace bcnn
