#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "bcnn/network.hpp"

namespace bcnn {

// Model file layout, little-endian throughout:
//
//   "BCNN"  u16 version  u16 flags (bit 0: quantized)
//   u32 input w, h, c    u32 layer count
//   per layer:
//     u8 type (1 fc, 2 conv, 3 pool)  u8 activation (0 identity, 1 relu, 2 logits)
//     fc:   u32 m, n, k
//     conv: u32 in_w, in_h, channels, out_channels, kernel, k
//     pool: u32 in_w, in_h, channels, out_w, out_h
//     if quantized: u8 has_w, u8 total, u8 frac, u8 has_act, u8 total, u8 frac
//     fc/conv payload: first vectors then bias, as f64, or as i32 codes when
//     the layer has a weight format
//   u32 CRC-32 of every preceding byte

inline constexpr std::uint16_t kModelVersion = 1;

std::vector<std::uint8_t> serialize_model(const Network& net);
/// Throws Error(Data) on a bad magic, unknown version, checksum mismatch,
/// truncation or an inconsistent layer record.
Network deserialize_model(std::span<const std::uint8_t> bytes);

void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

}  // namespace bcnn
