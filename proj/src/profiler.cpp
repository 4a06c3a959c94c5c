#include "gcsep/profiler.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "gcsep/layers.hpp"
#include "gcsep/ops.hpp"

namespace gcsep {

namespace {

std::uint64_t blstm_params(std::size_t in, std::size_t hidden) {
  return 2 * LstmLayer::param_count(in, hidden);
}

// BLSTM + projection FC + LN over the unit's feature width
std::uint64_t unit_params(std::size_t feat, std::size_t hidden) {
  return blstm_params(feat, hidden) + (2 * hidden * feat + feat) + 2 * feat;
}

// per sequence element: both directions of the BLSTM plus the projection
std::uint64_t unit_macs_per_element(std::size_t feat, std::size_t hidden) {
  const std::uint64_t lstm_cell = 4 * hidden * (feat + hidden) + 16 * hidden;
  return 2 * lstm_cell + 2 * hidden * feat;
}

}  // namespace

std::uint64_t count_model_params(const ModelConfig& cfg) {
  cfg.validate();
  const std::uint64_t n = cfg.encoder_filters, w = cfg.window_samples;
  const std::size_t feat = cfg.block_feat();
  std::uint64_t total = n * w;      // encoder
  total += 2 * n;                   // encoder LN
  if (cfg.group_count == 1) total += n * cfg.lstm_input + cfg.lstm_input;
  const std::uint64_t per_block =
      (cfg.group_count > 1 ? 3ULL : 2ULL) * unit_params(feat, cfg.lstm_hidden);
  total += cfg.depth * per_block;
  if (cfg.group_count > 1) {
    total += cfg.group_size * cfg.num_speakers * cfg.group_size +
             cfg.num_speakers * cfg.group_size;
  } else {
    total += cfg.lstm_input * cfg.num_speakers * n + cfg.num_speakers * n;
  }
  total += n * w;  // decoder
  return total;
}

std::uint64_t count_model_macs(const ModelConfig& cfg, double input_seconds) {
  cfg.validate();
  if (!(input_seconds > 0.0)) throw std::invalid_argument("profile: input_seconds must be > 0");
  const auto samples = static_cast<std::size_t>(
      std::llround(input_seconds * static_cast<double>(cfg.sample_rate)));
  const std::uint64_t frames = cfg.frames_for(samples);
  const std::size_t hop = cfg.hop_for(frames);
  const std::uint64_t positions = 2 * hop * segment_count(frames, hop);
  const std::uint64_t n = cfg.encoder_filters, w = cfg.window_samples;
  const std::uint64_t groups = cfg.group_count > 1 ? cfg.group_count : 1;
  const std::size_t feat = cfg.block_feat();

  std::uint64_t total = n * w * frames;  // encoder conv, C_in = 1
  if (cfg.group_count == 1) total += n * cfg.lstm_input * frames;
  // each pass (group comm, intra, inter) processes `groups` elements per position
  const std::uint64_t passes = cfg.group_count > 1 ? 3 : 2;
  total += cfg.depth * passes * groups * unit_macs_per_element(feat, cfg.lstm_hidden) * positions;
  if (cfg.group_count > 1) {
    total += groups * (cfg.group_size * cfg.num_speakers * cfg.group_size) * frames;
  } else {
    total += cfg.lstm_input * cfg.num_speakers * n * frames;
  }
  const std::uint64_t out_samples = (frames - 1) * cfg.stride_samples + w;
  total += cfg.num_speakers * out_samples * n * w;  // decoder at output resolution
  return total;
}

ComplexityReport profile_model(const ModelConfig& cfg, double input_seconds) {
  cfg.validate();
  ComplexityReport report;
  report.config = cfg;
  report.input_seconds = input_seconds;
  const auto samples = static_cast<std::size_t>(
      std::llround(input_seconds * static_cast<double>(cfg.sample_rate)));
  const std::uint64_t frames = cfg.frames_for(samples);
  const std::size_t hop = cfg.hop_for(frames);
  const std::uint64_t positions = 2 * hop * segment_count(frames, hop);
  const std::uint64_t n = cfg.encoder_filters, w = cfg.window_samples;
  const std::uint64_t groups = cfg.group_count > 1 ? cfg.group_count : 1;
  const std::size_t feat = cfg.block_feat();

  report.breakdown.push_back({"encoder", n * w, n * w * frames});
  report.breakdown.push_back({"encoder_norm", 2 * n, 0});
  if (cfg.group_count == 1) {
    report.breakdown.push_back(
        {"bottleneck", n * cfg.lstm_input + cfg.lstm_input, n * cfg.lstm_input * frames});
  }
  const std::uint64_t unit_macs =
      groups * unit_macs_per_element(feat, cfg.lstm_hidden) * positions;
  for (std::size_t b = 0; b < cfg.depth; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    if (cfg.group_count > 1) {
      report.breakdown.push_back(
          {prefix + ".groupcomm", unit_params(feat, cfg.lstm_hidden), unit_macs});
    }
    report.breakdown.push_back({prefix + ".intra", unit_params(feat, cfg.lstm_hidden), unit_macs});
    report.breakdown.push_back({prefix + ".inter", unit_params(feat, cfg.lstm_hidden), unit_macs});
  }
  if (cfg.group_count > 1) {
    report.breakdown.push_back(
        {"mask", cfg.group_size * cfg.num_speakers * cfg.group_size +
                     cfg.num_speakers * cfg.group_size,
         groups * cfg.group_size * cfg.num_speakers * cfg.group_size * frames});
  } else {
    report.breakdown.push_back({"mask", cfg.lstm_input * cfg.num_speakers * n +
                                            cfg.num_speakers * n,
                                cfg.lstm_input * cfg.num_speakers * n * frames});
  }
  const std::uint64_t out_samples = (frames - 1) * cfg.stride_samples + w;
  report.breakdown.push_back({"decoder", n * w, cfg.num_speakers * out_samples * n * w});

  for (const auto& e : report.breakdown) {
    report.total_params += e.params;
    report.total_macs += e.macs;
  }
  return report;
}

std::vector<ComplexityReport> sweep(const std::vector<ModelConfig>& grid, double input_seconds) {
  std::vector<ComplexityReport> out;
  out.reserve(grid.size());
  for (const ModelConfig& cfg : grid) out.push_back(profile_model(cfg, input_seconds));
  return out;
}

std::vector<ModelConfig> table2_configs() {
  auto make = [](std::size_t k, std::size_t m, std::size_t n, std::size_t hi, std::size_t ho,
                 std::size_t depth) {
    ModelConfig cfg;
    cfg.group_count = k;
    cfg.group_size = m;
    cfg.encoder_filters = n;
    cfg.lstm_input = hi;
    cfg.lstm_hidden = ho;
    cfg.depth = depth;
    return cfg;
  };
  return {
      make(1, 128, 128, 64, 128, 6),  // baseline DPRNN
      make(2, 64, 128, 64, 128, 4),   make(4, 32, 128, 32, 64, 4),
      make(8, 16, 128, 16, 32, 4),    make(16, 8, 128, 8, 16, 4),
      make(16, 8, 128, 8, 16, 6),     make(16, 16, 256, 16, 32, 2),
      make(16, 16, 256, 16, 32, 4),   make(32, 4, 128, 4, 8, 6),
      make(32, 4, 128, 4, 8, 10),     make(32, 8, 256, 8, 16, 2),
      make(32, 8, 256, 8, 16, 4),
  };
}

namespace {

std::string format_row(const ComplexityReport& r, const ComplexityReport& base, bool csv) {
  const double params_ratio =
      static_cast<double>(base.total_params) / static_cast<double>(r.total_params);
  const double macs_ratio = static_cast<double>(base.total_macs) / static_cast<double>(r.total_macs);
  char buf[256];
  if (csv) {
    std::snprintf(buf, sizeof(buf), "%zu,%zu,%zu,%zu,%zu,%zu,%llu,%.2f,%llu,%.2f",
                  r.config.group_count, r.config.group_size, r.config.encoder_filters,
                  r.config.lstm_input, r.config.lstm_hidden, r.config.depth,
                  static_cast<unsigned long long>(r.total_params), params_ratio,
                  static_cast<unsigned long long>(r.total_macs), macs_ratio);
  } else {
    std::snprintf(buf, sizeof(buf), "%4zu %4zu %4zu %5zu %5zu %3zu %12llu %8.1fx %14llu %8.1fx",
                  r.config.group_count, r.config.group_size, r.config.encoder_filters,
                  r.config.lstm_input, r.config.lstm_hidden, r.config.depth,
                  static_cast<unsigned long long>(r.total_params), params_ratio,
                  static_cast<unsigned long long>(r.total_macs), macs_ratio);
  }
  return buf;
}

}  // namespace

std::string sweep_to_csv(const std::vector<ComplexityReport>& reports) {
  std::ostringstream os;
  os << "K,M,N,H_i,H_o,L,params,params_ratio,macs,macs_ratio\n";
  if (reports.empty()) return os.str();
  for (const auto& r : reports) os << format_row(r, reports.front(), true) << "\n";
  return os.str();
}

std::string sweep_to_text(const std::vector<ComplexityReport>& reports) {
  std::ostringstream os;
  os << "   K    M    N   H_i   H_o   L       params    size_x           macs    macs_x\n";
  if (reports.empty()) return os.str();
  for (const auto& r : reports) os << format_row(r, reports.front(), false) << "\n";
  return os.str();
}

}  // namespace gcsep
