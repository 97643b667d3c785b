#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bcnn/network.hpp"

namespace bcnn {

/// `key = value` lines; `#` starts a comment, blank lines are ignored. Keys
/// may repeat only by mistake: a duplicate is an error. Every failure is an
/// Error(Config) naming the offending key and line.
class Config {
 public:
  static Config parse(const std::string& text, const std::string& source = "<config>");
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  const std::string& source() const { return source_; }

  std::string get_string(const std::string& key) const;
  double get_double(const std::string& key) const;
  std::uint64_t get_u64(const std::string& key) const;
  std::size_t get_size(const std::string& key) const { return get_u64(key); }
  bool get_bool(const std::string& key) const;

  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const {
    return get_u64(key, fallback);
  }
  bool get_bool(const std::string& key, bool fallback) const;

  /// Relative paths resolve against the config file's directory.
  std::filesystem::path get_path(const std::string& key) const;

  void set(const std::string& key, const std::string& value);

  /// Keys never read by any getter; typos show up here.
  std::vector<std::string> unused_keys() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  const Entry& entry(const std::string& key) const;
  [[noreturn]] void fail(const std::string& key, const std::string& what) const;

  std::string source_;
  std::filesystem::path base_dir_;
  std::map<std::string, Entry> entries_;
  mutable std::set<std::string> used_;
};

/// One layer of an architecture string, e.g. "fc:128:64:relu",
/// "conv:8:3:4:relu" (out channels, kernel, block size) or "pool:16x16".
struct LayerSpec {
  enum class Kind { Fc, Conv, Pool } kind = Kind::Fc;
  std::size_t out = 0;     // fc outputs or conv output channels
  std::size_t kernel = 0;  // conv only
  std::size_t k = 1;       // block size
  std::size_t pool_w = 0;
  std::size_t pool_h = 0;
  Activation activation = Activation::Relu;
};

/// "WxHxC", "WxH" (C = 1) or a plain length N (N x 1 x 1).
InputShape parse_shape(const std::string& text);
std::vector<LayerSpec> parse_architecture(const std::string& text);
Activation parse_activation(const std::string& text);
const char* activation_name(Activation act);

/// Random initialization per layer from `rng`; shapes chain from `input`.
Network build_network(const InputShape& input, const std::vector<LayerSpec>& specs,
                      std::mt19937_64& rng);

}  // namespace bcnn
