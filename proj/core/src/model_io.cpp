#include "bcnn/model_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "bcnn/error.hpp"

namespace bcnn {

namespace {

static_assert(std::endian::native == std::endian::little,
              "model I/O assumes a little-endian host");

enum : std::uint8_t { kTypeFc = 1, kTypeConv = 2, kTypePool = 3 };
constexpr std::uint16_t kFlagQuantized = 1;
constexpr char kMagic[4] = {'B', 'C', 'N', 'N'};

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  template <typename T>
  void put(T v) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out_.insert(out_.end(), p, p + sizeof(T));
  }
  void put_u32(std::size_t v) {
    if (v > 0xffffffffu) {
      throw Error(ErrorKind::InvalidArgument, "model file: dimension exceeds 32 bits");
    }
    put(static_cast<std::uint32_t>(v));
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > bytes_.size()) {
      throw Error(ErrorKind::Data, "model file: truncated at byte " + std::to_string(pos_));
    }
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::size_t get_u32() { return get<std::uint32_t>(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::uint8_t activation_code(Activation act) {
  switch (act) {
    case Activation::Identity:
      return 0;
    case Activation::Relu:
      return 1;
    case Activation::SoftmaxLogits:
      return 2;
  }
  return 0;
}

Activation activation_from_code(std::uint8_t code) {
  switch (code) {
    case 0:
      return Activation::Identity;
    case 1:
      return Activation::Relu;
    case 2:
      return Activation::SoftmaxLogits;
    default:
      throw Error(ErrorKind::Data, "model file: unknown activation code " + std::to_string(code));
  }
}

void put_format(Writer& w, const std::optional<FixedPointFormat>& fmt) {
  w.put<std::uint8_t>(fmt ? 1 : 0);
  w.put<std::uint8_t>(fmt ? static_cast<std::uint8_t>(fmt->total_bits) : 0);
  w.put<std::uint8_t>(fmt ? static_cast<std::uint8_t>(fmt->frac_bits) : 0);
}

std::optional<FixedPointFormat> get_format(Reader& r) {
  const auto present = r.get<std::uint8_t>();
  const FixedPointFormat fmt{r.get<std::uint8_t>(), r.get<std::uint8_t>()};
  if (present == 0) {
    return std::nullopt;
  }
  try {
    fmt.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Data, std::string("model file: ") + e.what());
  }
  return fmt;
}

void put_values(Writer& w, std::span<const double> values,
                const std::optional<FixedPointFormat>& fmt) {
  for (const double v : values) {
    if (fmt) {
      w.put(static_cast<std::int32_t>(quantize_code(v, *fmt)));
    } else {
      w.put(v);
    }
  }
}

std::vector<double> get_values(Reader& r, std::size_t count,
                               const std::optional<FixedPointFormat>& fmt) {
  const std::size_t width = fmt ? sizeof(std::int32_t) : sizeof(double);
  if (count > r.remaining() / width) {
    throw Error(ErrorKind::Data, "model file: payload shorter than the layer record");
  }
  std::vector<double> values(count);
  for (auto& v : values) {
    v = fmt ? dequantize(r.get<std::int32_t>(), *fmt) : r.get<double>();
  }
  return values;
}

// Guards against absurd extents in a damaged header before allocating.
void check_dims(std::size_t v) {
  if (v == 0 || v > (1u << 24)) {
    throw Error(ErrorKind::Data, "model file: implausible layer dimension " + std::to_string(v));
  }
}

BlockCirculantMatrix read_matrix(Reader& r, std::size_t m, std::size_t n, std::size_t k,
                                 const std::optional<FixedPointFormat>& fmt) {
  PartitionScheme scheme;
  try {
    scheme = partition(m, n, k);
  } catch (const Error& e) {
    throw Error(ErrorKind::Data, std::string("model file: ") + e.what());
  }
  return {scheme, get_values(r, scheme.num_weights(), fmt)};
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const Network& net) {
  validate(net);
  const bool quantized = net.quantized();
  Writer w;
  for (const char c : kMagic) w.put(c);
  w.put(kModelVersion);
  w.put<std::uint16_t>(quantized ? kFlagQuantized : 0);
  w.put_u32(net.input.w);
  w.put_u32(net.input.h);
  w.put_u32(net.input.c);
  w.put_u32(net.layers.size());

  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const Layer& layer = net.layers[l];
    const LayerQuantization q = quantized ? net.quantization[l] : LayerQuantization{};
    if (const auto* fc = std::get_if<FCLayer>(&layer)) {
      const auto& s = fc->weights.scheme();
      w.put(kTypeFc);
      w.put(activation_code(fc->activation));
      w.put_u32(s.m);
      w.put_u32(s.n);
      w.put_u32(s.k);
    } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      w.put(kTypeConv);
      w.put(activation_code(conv->activation));
      w.put_u32(conv->in_w);
      w.put_u32(conv->in_h);
      w.put_u32(conv->channels);
      w.put_u32(conv->out_channels);
      w.put_u32(conv->kernel);
      w.put_u32(conv->filter.scheme().k);
    } else {
      const auto& pool = std::get<PoolLayer>(layer);
      w.put(kTypePool);
      w.put<std::uint8_t>(0);
      w.put_u32(pool.in_w);
      w.put_u32(pool.in_h);
      w.put_u32(pool.channels);
      w.put_u32(pool.out_w);
      w.put_u32(pool.out_h);
    }
    if (quantized) {
      put_format(w, q.weights);
      put_format(w, q.activations);
    }
    if (is_trainable(layer)) {
      put_values(w, layer_weights(layer).first_vectors(), q.weights);
      put_values(w, layer_bias(layer), q.weights);
    }
  }
  const std::uint32_t crc = crc32_of(w.bytes());
  w.put(crc);
  return std::move(w.bytes());
}

Network deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 + 2 + 2 + 4 * 4 + 4) {
    throw Error(ErrorKind::Data, "model file: too short to hold a header");
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::Data, "model file: bad magic, expected \"BCNN\"");
  }
  const auto body = bytes.first(bytes.size() - 4);
  std::uint32_t stored = 0;
  std::memcpy(&stored, bytes.data() + body.size(), 4);
  if (crc32_of(body) != stored) {
    throw Error(ErrorKind::Data, "model file: checksum mismatch (file is corrupt)");
  }

  Reader r(body);
  r.get<std::uint32_t>();  // magic, checked above
  const auto version = r.get<std::uint16_t>();
  if (version != kModelVersion) {
    throw Error(ErrorKind::Data, "model file: unsupported version " + std::to_string(version));
  }
  const auto flags = r.get<std::uint16_t>();
  const bool quantized = (flags & kFlagQuantized) != 0;

  Network net;
  net.input.w = r.get_u32();
  net.input.h = r.get_u32();
  net.input.c = r.get_u32();
  check_dims(net.input.w);
  check_dims(net.input.h);
  check_dims(net.input.c);
  const std::size_t count = r.get_u32();
  if (count > r.remaining()) {
    throw Error(ErrorKind::Data, "model file: implausible layer count");
  }

  for (std::size_t l = 0; l < count; ++l) {
    const auto type = r.get<std::uint8_t>();
    const Activation act = activation_from_code(r.get<std::uint8_t>());
    std::vector<std::size_t> dims(type == kTypeFc ? 3 : type == kTypeConv ? 6 : 5);
    if (type != kTypeFc && type != kTypeConv && type != kTypePool) {
      throw Error(ErrorKind::Data, "model file: unknown layer type " + std::to_string(type));
    }
    for (auto& d : dims) {
      d = r.get_u32();
      check_dims(d);
    }
    LayerQuantization q;
    if (quantized) {
      q.weights = get_format(r);
      q.activations = get_format(r);
    }

    if (type == kTypeFc) {
      FCLayer fc;
      fc.activation = act;
      fc.weights = read_matrix(r, dims[0], dims[1], dims[2], q.weights);
      fc.bias = get_values(r, dims[0], q.weights);
      net.layers.emplace_back(std::move(fc));
    } else if (type == kTypeConv) {
      ConvLayer conv;
      conv.in_w = dims[0];
      conv.in_h = dims[1];
      conv.channels = dims[2];
      conv.out_channels = dims[3];
      conv.kernel = dims[4];
      conv.activation = act;
      if (conv.kernel > conv.in_w || conv.kernel > conv.in_h) {
        throw Error(ErrorKind::Data, "model file: conv kernel larger than its input");
      }
      conv.filter = read_matrix(r, conv.out_channels, conv.patch_len(), dims[5], q.weights);
      conv.bias = get_values(r, conv.out_channels, q.weights);
      net.layers.emplace_back(std::move(conv));
    } else {
      net.layers.emplace_back(PoolLayer{dims[0], dims[1], dims[2], dims[3], dims[4]});
    }
    if (quantized) {
      net.quantization.push_back(q);
    }
  }
  if (r.remaining() != 0) {
    throw Error(ErrorKind::Data, "model file: trailing bytes after the last layer");
  }
  try {
    validate(net);
  } catch (const Error& e) {
    throw Error(ErrorKind::Data, std::string("model file: ") + e.what());
  }
  return net;
}

void save_model(const Network& net, const std::filesystem::path& path) {
  const auto bytes = serialize_model(net);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw Error(ErrorKind::Data, "cannot write model file " + path.string());
  }
}

Network load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Data, "cannot open model file " + path.string());
  }
  const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in),
                                        std::istreambuf_iterator<char>()};
  return deserialize_model(bytes);
}

}  // namespace bcnn
