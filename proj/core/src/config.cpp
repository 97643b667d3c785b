#include "bcnn/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "bcnn/error.hpp"

namespace bcnn {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) {
    return {};
  }
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) {
    parts.push_back(trim(part));
  }
  return parts;
}

std::size_t parse_count(const std::string& text, const std::string& what) {
  std::size_t v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw Error(ErrorKind::Config, what + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& source) {
  Config cfg;
  cfg.source_ = source;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Config, source + ":" + std::to_string(line_no) +
                                         ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorKind::Config,
                  source + ":" + std::to_string(line_no) + ": empty key before '='");
    }
    if (cfg.entries_.count(key) != 0) {
      throw Error(ErrorKind::Config, source + ":" + std::to_string(line_no) + ": duplicate key '" +
                                         key + "' (first set on line " +
                                         std::to_string(cfg.entries_[key].line) + ")");
    }
    cfg.entries_[key] = {trim(line.substr(eq + 1)), line_no};
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::Config, "cannot read config file " + path.string());
  }
  std::stringstream buf;
  buf << in.rdbuf();
  Config cfg = parse(buf.str(), path.string());
  cfg.base_dir_ = path.parent_path();
  return cfg;
}

bool Config::has(const std::string& key) const { return entries_.count(key) != 0; }

const Config::Entry& Config::entry(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) {
    throw Error(ErrorKind::Config, source_ + ": missing required key '" + key + "'");
  }
  used_.insert(key);
  return it->second;
}

void Config::fail(const std::string& key, const std::string& what) const {
  const auto it = entries_.find(key);
  const std::string where =
      it == entries_.end() ? source_ : source_ + ":" + std::to_string(it->second.line);
  throw Error(ErrorKind::Config, where + ": key '" + key + "': " + what);
}

std::string Config::get_string(const std::string& key) const {
  const std::string& v = entry(key).value;
  if (v.empty()) {
    fail(key, "value is empty");
  }
  return v;
}

double Config::get_double(const std::string& key) const {
  const std::string& v = entry(key).value;
  double out = 0.0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    fail(key, "expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t Config::get_u64(const std::string& key) const {
  const std::string& v = entry(key).value;
  std::uint64_t out = 0;
  const char* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end || v.empty()) {
    fail(key, "expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool Config::get_bool(const std::string& key) const {
  const std::string v = lower(entry(key).value);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(key, "expected true or false, got '" + v + "'");
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? get_string(key) : fallback;
}
double Config::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}
std::uint64_t Config::get_u64(const std::string& key, std::uint64_t fallback) const {
  return has(key) ? get_u64(key) : fallback;
}
bool Config::get_bool(const std::string& key, bool fallback) const {
  return has(key) ? get_bool(key) : fallback;
}

std::filesystem::path Config::get_path(const std::string& key) const {
  std::filesystem::path p = get_string(key);
  if (p.is_relative() && !base_dir_.empty()) {
    p = base_dir_ / p;
  }
  return p;
}

void Config::set(const std::string& key, const std::string& value) {
  auto& e = entries_[key];
  e.value = value;
}

std::vector<std::string> Config::unused_keys() const {
  std::vector<std::string> keys;
  for (const auto& [key, _] : entries_) {
    if (used_.count(key) == 0) {
      keys.push_back(key);
    }
  }
  return keys;
}

InputShape parse_shape(const std::string& text) {
  const auto parts = split(lower(text), 'x');
  if (parts.empty() || parts.size() > 3) {
    throw Error(ErrorKind::Config, "shape '" + text + "': expected WxHxC, WxH or N");
  }
  InputShape s;
  s.w = parse_count(parts[0], "shape '" + text + "'");
  s.h = parts.size() > 1 ? parse_count(parts[1], "shape '" + text + "'") : 1;
  s.c = parts.size() > 2 ? parse_count(parts[2], "shape '" + text + "'") : 1;
  if (s.size() == 0) {
    throw Error(ErrorKind::Config, "shape '" + text + "': extents must be positive");
  }
  return s;
}

Activation parse_activation(const std::string& text) {
  const std::string t = lower(text);
  if (t == "relu") return Activation::Relu;
  if (t == "identity" || t == "linear") return Activation::Identity;
  if (t == "logits" || t == "softmax") return Activation::SoftmaxLogits;
  throw Error(ErrorKind::Config,
              "unknown activation '" + text + "' (expected relu, identity or logits)");
}

const char* activation_name(Activation act) {
  switch (act) {
    case Activation::Identity:
      return "identity";
    case Activation::Relu:
      return "relu";
    case Activation::SoftmaxLogits:
      return "logits";
  }
  return "?";
}

std::vector<LayerSpec> parse_architecture(const std::string& text) {
  std::vector<LayerSpec> specs;
  for (const auto& item : split(text, ',')) {
    if (item.empty()) {
      continue;
    }
    const auto f = split(item, ':');
    const std::string kind = lower(f[0]);
    const std::string ctx = "layer '" + item + "'";
    LayerSpec s;
    if (kind == "fc" && f.size() == 4) {
      s.kind = LayerSpec::Kind::Fc;
      s.out = parse_count(f[1], ctx);
      s.k = parse_count(f[2], ctx);
      s.activation = parse_activation(f[3]);
    } else if (kind == "conv" && f.size() == 5) {
      s.kind = LayerSpec::Kind::Conv;
      s.out = parse_count(f[1], ctx);
      s.kernel = parse_count(f[2], ctx);
      s.k = parse_count(f[3], ctx);
      s.activation = parse_activation(f[4]);
    } else if (kind == "pool" && f.size() == 2) {
      s.kind = LayerSpec::Kind::Pool;
      const InputShape target = parse_shape(f[1]);
      if (target.c != 1) {
        throw Error(ErrorKind::Config, ctx + ": pool target is WxH");
      }
      s.pool_w = target.w;
      s.pool_h = target.h;
    } else {
      throw Error(ErrorKind::Config,
                  ctx + ": expected fc:<out>:<k>:<act>, conv:<P>:<r>:<k>:<act> or pool:<W>x<H>");
    }
    if (s.kind != LayerSpec::Kind::Pool && (s.out == 0 || s.k == 0)) {
      throw Error(ErrorKind::Config, ctx + ": sizes must be positive");
    }
    specs.push_back(s);
  }
  if (specs.empty()) {
    throw Error(ErrorKind::Config, "architecture is empty");
  }
  return specs;
}

Network build_network(const InputShape& input, const std::vector<LayerSpec>& specs,
                      std::mt19937_64& rng) {
  Network net;
  net.input = input;
  InputShape cur = input;
  for (std::size_t l = 0; l < specs.size(); ++l) {
    const LayerSpec& s = specs[l];
    try {
      switch (s.kind) {
        case LayerSpec::Kind::Fc: {
          net.layers.emplace_back(FCLayer::make(s.out, cur.size(), s.k, s.activation, rng));
          cur = {s.out, 1, 1};
          break;
        }
        case LayerSpec::Kind::Conv: {
          auto conv = ConvLayer::make(cur.w, cur.h, cur.c, s.out, s.kernel, s.k, s.activation, rng);
          cur = {conv.out_w(), conv.out_h(), s.out};
          net.layers.emplace_back(std::move(conv));
          break;
        }
        case LayerSpec::Kind::Pool: {
          if (s.pool_w == 0 || s.pool_h == 0 || s.pool_w > cur.w || s.pool_h > cur.h) {
            throw Error(ErrorKind::Config, "pool target must not exceed its input");
          }
          net.layers.emplace_back(PoolLayer{cur.w, cur.h, cur.c, s.pool_w, s.pool_h});
          cur = {s.pool_w, s.pool_h, cur.c};
          break;
        }
      }
    } catch (const Error& e) {
      throw Error(ErrorKind::Config, "architecture layer " + std::to_string(l) + ": " + e.what());
    }
  }
  validate(net);
  return net;
}

}  // namespace bcnn
