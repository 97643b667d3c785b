#include "bcnn/pipeline_sim.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <variant>

#include "bcnn/error.hpp"

namespace bcnn {

void PipelineConfig::validate() const {
  if (fft_stages == 0 || mem_stages == 0 || eltwise_stages == 0 || multiplier_banks == 0 ||
      onchip_bytes == 0 || bytes_per_value == 0) {
    throw Error(ErrorKind::Config, "pipeline: stage counts, banks and memory must be positive");
  }
  if (!is_power_of_two(fft_points)) {
    throw Error(ErrorKind::Config, "pipeline: fft_points must be a power of two");
  }
  if (!(clock_hz > 0.0)) {
    throw Error(ErrorKind::Config, "pipeline: clock_hz must be positive");
  }
}

std::size_t PipelineConfig::max_depth() const {
  return std::max({fft_depth(), ifft_depth(), eltwise_depth()});
}

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

}  // namespace

LayerSchedule schedule_layer(const PartitionScheme& scheme, const PipelineConfig& cfg,
                             std::size_t batch, std::size_t vectors_per_image) {
  cfg.validate();
  if (batch == 0) {
    throw Error(ErrorKind::Config, "pipeline: batch size must be positive");
  }
  if (scheme.k > cfg.fft_points) {
    throw Error(ErrorKind::InvalidArgument,
                "pipeline: block size " + std::to_string(scheme.k) + " exceeds the " +
                    std::to_string(cfg.fft_points) + "-point FFT block");
  }
  LayerSchedule s;
  s.scheme = scheme;
  s.vectors_per_image = vectors_per_image;
  const std::uint64_t b = batch;
  const std::uint64_t per_image_ffts = scheme.q * vectors_per_image;
  const std::uint64_t per_image_iffts = scheme.p * vectors_per_image;
  const std::uint64_t per_image_groups = scheme.p * scheme.q * vectors_per_image;

  s.fft_count = per_image_ffts * b;
  s.ifft_count = per_image_iffts * b;
  s.eltwise_groups = per_image_groups * b;

  const std::uint64_t packing = cfg.fft_points / scheme.k;
  s.fft_slots = ceil_div(per_image_ffts, packing) * b;
  s.ifft_slots = ceil_div(per_image_iffts, packing) * b;
  s.eltwise_slots = ceil_div(per_image_groups, cfg.multiplier_banks) * b;

  s.fill_overhead_cycles = cfg.fft_depth() + cfg.eltwise_depth() + cfg.ifft_depth();
  const std::uint64_t steady =
      cfg.shared_multipliers ? s.fft_slots + s.eltwise_slots + s.ifft_slots
                             : std::max(s.fft_slots + s.ifft_slots, s.eltwise_slots);
  s.cycles = s.fill_overhead_cycles + steady;
  s.frames_per_second = static_cast<double>(batch) * cfg.clock_hz / static_cast<double>(s.cycles);
  return s;
}

std::size_t per_image_footprint_bytes(const Network& net, const PipelineConfig& cfg) {
  std::size_t values = net.input_size();
  for (const auto& layer : net.layers) {
    std::size_t spectra = 0;
    if (is_trainable(layer)) {
      const auto& s = layer_weights(layer).scheme();
      spectra = 2 * s.q * s.bins();
    }
    values = std::max(values, layer_input_size(layer) + layer_output_size(layer) + spectra);
  }
  return values * cfg.bytes_per_value;
}

ScheduleReport simulate_network(const Network& net, const PipelineConfig& cfg,
                                std::size_t batch) {
  cfg.validate();
  validate(net);
  ScheduleReport report;
  report.batch = batch;
  for (const auto& layer : net.layers) {
    LayerSchedule s;
    if (const auto* fc = std::get_if<FCLayer>(&layer)) {
      s = schedule_layer(fc->weights.scheme(), cfg, batch, 1);
      s.kind = "fc";
    } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      s = schedule_layer(conv->filter.scheme(), cfg, batch, conv->out_w() * conv->out_h());
      s.kind = "conv";
    } else {
      // Prior pooling happens before data reaches the FFT block.
      s.kind = "pool";
      s.vectors_per_image = 0;
    }
    report.fft_count += s.fft_count;
    report.eltwise_groups += s.eltwise_groups;
    report.ifft_count += s.ifft_count;
    report.fill_overhead_cycles += s.fill_overhead_cycles;
    report.cycles += s.cycles;
    report.steady_slots += s.cycles - s.fill_overhead_cycles;
    report.layers.push_back(std::move(s));
  }
  report.throughput_fps =
      report.cycles == 0 ? 0.0
                         : static_cast<double>(batch) * cfg.clock_hz / static_cast<double>(report.cycles);
  report.per_image_bytes = per_image_footprint_bytes(net, cfg);
  report.max_batch = cfg.onchip_bytes / report.per_image_bytes;
  report.memory_violation = batch > report.max_batch;
  return report;
}

TransformCost matvec_cost(const PartitionScheme& scheme) {
  const TransformCost fwd = rfft_cost(scheme.k);
  const TransformCost inv = irfft_cost(scheme.k);
  const TransformCost group = eltwise_group_cost(scheme.k);
  const std::uint64_t groups = scheme.p * scheme.q;
  return {scheme.q * fwd.mults + groups * group.mults + scheme.p * inv.mults,
          scheme.q * fwd.adds + groups * group.adds + scheme.p * inv.adds};
}

OpTotals count_real_ops(const Network& net) {
  OpTotals totals;
  for (const auto& layer : net.layers) {
    LayerOps ops;
    if (const auto* fc = std::get_if<FCLayer>(&layer)) {
      const auto& s = fc->weights.scheme();
      const TransformCost c = matvec_cost(s);
      ops.kind = "fc";
      ops.equivalent_ops = 2.0 * static_cast<double>(s.m) * static_cast<double>(s.n);
      ops.actual_mults = static_cast<double>(c.mults);
      ops.actual_ops = static_cast<double>(c.mults + c.adds);
    } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
      const auto& s = conv->filter.scheme();
      const TransformCost c = matvec_cost(s);
      const double rows = static_cast<double>(conv->out_w() * conv->out_h());
      ops.kind = "conv";
      ops.equivalent_ops = 2.0 * rows * static_cast<double>(conv->out_channels) *
                           static_cast<double>(conv->patch_len());
      ops.actual_mults = rows * static_cast<double>(c.mults);
      ops.actual_ops = rows * static_cast<double>(c.mults + c.adds);
    } else {
      ops.kind = "pool";
    }
    totals.equivalent_ops += ops.equivalent_ops;
    totals.actual_ops += ops.actual_ops;
    totals.actual_mults += ops.actual_mults;
    totals.layers.push_back(ops);
  }
  totals.ratio = totals.equivalent_ops > 0.0 ? totals.actual_ops / totals.equivalent_ops : 0.0;
  return totals;
}

std::string format_schedule_table(const ScheduleReport& report) {
  std::ostringstream out;
  out << "layer kind     k      ffts   eltwise     iffts      fill      cycles        fps\n";
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    const auto& s = report.layers[l];
    out << std::setw(5) << l << ' ' << std::left << std::setw(5) << s.kind << std::right
        << std::setw(5) << (s.kind == "pool" ? 0 : s.scheme.k) << std::setw(10) << s.fft_count
        << std::setw(10) << s.eltwise_groups << std::setw(10) << s.ifft_count << std::setw(10)
        << s.fill_overhead_cycles << std::setw(12) << s.cycles << std::setw(11)
        << std::setprecision(4) << s.frames_per_second << '\n';
  }
  out << "total      " << std::setw(15) << report.fft_count << std::setw(10)
      << report.eltwise_groups << std::setw(10) << report.ifft_count << std::setw(10)
      << report.fill_overhead_cycles << std::setw(12) << report.cycles << std::setw(11)
      << std::setprecision(4) << report.throughput_fps << '\n';
  out << "batch " << report.batch << ", per-image footprint " << report.per_image_bytes
      << " B, max batch " << report.max_batch
      << (report.memory_violation ? "  ** exceeds on-chip memory **" : "") << '\n';
  return out.str();
}

std::string format_schedule_kv(const ScheduleReport& report) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "batch=" << report.batch << '\n';
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    const auto& s = report.layers[l];
    const std::string p = "layer." + std::to_string(l) + ".";
    out << p << "kind=" << s.kind << '\n'
        << p << "fft_count=" << s.fft_count << '\n'
        << p << "eltwise_groups=" << s.eltwise_groups << '\n'
        << p << "ifft_count=" << s.ifft_count << '\n'
        << p << "fill_overhead_cycles=" << s.fill_overhead_cycles << '\n'
        << p << "cycles=" << s.cycles << '\n'
        << p << "frames_per_second=" << s.frames_per_second << '\n';
  }
  out << "fft_count=" << report.fft_count << '\n'
      << "eltwise_groups=" << report.eltwise_groups << '\n'
      << "ifft_count=" << report.ifft_count << '\n'
      << "fill_overhead_cycles=" << report.fill_overhead_cycles << '\n'
      << "cycles=" << report.cycles << '\n'
      << "throughput_fps=" << report.throughput_fps << '\n'
      << "per_image_bytes=" << report.per_image_bytes << '\n'
      << "max_batch=" << report.max_batch << '\n'
      << "memory_violation=" << (report.memory_violation ? 1 : 0) << '\n';
  return out.str();
}

}  // namespace bcnn
