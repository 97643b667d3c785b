#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "bcnn/block_circulant.hpp"
#include "bcnn/network.hpp"

namespace bcnn {

/// Knobs of the analytical accelerator model: one deeply pipelined FFT block,
/// time-multiplexed over FFTs, IFFTs and every layer.
struct PipelineConfig {
  std::size_t fft_stages = 7;         // butterfly stages of the FFT block
  std::size_t mem_stages = 4;         // memory read/write stages
  std::size_t ifft_extra_stages = 2;  // preprocessing, bias + activation
  std::size_t eltwise_stages = 3;     // multiply, add, accumulate
  std::size_t fft_points = 128;
  double clock_hz = 100e6;
  std::size_t multiplier_banks = 1;   // element-wise groups issued per cycle
  bool shared_multipliers = true;     // phase 2 reuses the FFT multipliers
  std::size_t onchip_bytes = 2u << 20;
  std::size_t bytes_per_value = 2;

  void validate() const;

  std::size_t fft_depth() const { return fft_stages + mem_stages; }
  std::size_t ifft_depth() const { return fft_depth() + ifft_extra_stages; }
  std::size_t eltwise_depth() const { return eltwise_stages + mem_stages; }
  std::size_t max_depth() const;
};

struct LayerSchedule {
  std::string kind;  // "fc", "conv" or "pool"
  PartitionScheme scheme;
  std::size_t vectors_per_image = 1;  // output positions for CONV

  std::uint64_t fft_count = 0;
  std::uint64_t eltwise_groups = 0;
  std::uint64_t ifft_count = 0;

  std::uint64_t fft_slots = 0;      // steady-state issue slots per phase
  std::uint64_t eltwise_slots = 0;
  std::uint64_t ifft_slots = 0;
  std::uint64_t fill_overhead_cycles = 0;
  std::uint64_t cycles = 0;
  double frames_per_second = 0.0;
};

struct ScheduleReport {
  std::size_t batch = 1;
  std::vector<LayerSchedule> layers;

  std::uint64_t fft_count = 0;
  std::uint64_t eltwise_groups = 0;
  std::uint64_t ifft_count = 0;
  std::uint64_t steady_slots = 0;
  std::uint64_t fill_overhead_cycles = 0;
  std::uint64_t cycles = 0;
  double throughput_fps = 0.0;

  std::size_t per_image_bytes = 0;
  std::size_t max_batch = 0;  // largest batch the on-chip budget holds
  bool memory_violation = false;
};

/// Three phases per layer: q*B input FFTs, p*q*B element-wise groups, p*B
/// output IFFTs (times vectors_per_image). Each phase pays its pipeline depth
/// once; launches then issue one per slot. Blocks smaller than the FFT block
/// run fft_points / k at a time in one launch.
LayerSchedule schedule_layer(const PartitionScheme& scheme, const PipelineConfig& cfg,
                             std::size_t batch, std::size_t vectors_per_image = 1);

/// Layers run back to back on the same block, outputs overwriting inputs.
ScheduleReport simulate_network(const Network& net, const PipelineConfig& cfg,
                                std::size_t batch);

/// Intermediate storage of one image: the largest layer's input, output and
/// input spectra.
std::size_t per_image_footprint_bytes(const Network& net, const PipelineConfig& cfg);

struct LayerOps {
  std::string kind;
  double equivalent_ops = 0.0;  // 2 * m * n per matvec, Y = X F for CONV
  double actual_ops = 0.0;      // real multiplies + adds of the FFT path
  double actual_mults = 0.0;
};

struct OpTotals {
  std::vector<LayerOps> layers;
  double equivalent_ops = 0.0;
  double actual_ops = 0.0;
  double actual_mults = 0.0;
  double ratio = 0.0;  // actual / equivalent
};

/// Cost of one block-circulant matvec with cached weight spectra.
TransformCost matvec_cost(const PartitionScheme& scheme);
OpTotals count_real_ops(const Network& net);

std::string format_schedule_table(const ScheduleReport& report);
std::string format_schedule_kv(const ScheduleReport& report);

}  // namespace bcnn
