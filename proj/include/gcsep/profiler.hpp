#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gcsep/separator.hpp"

namespace gcsep {

struct ComplexityEntry {
  std::string name;
  std::uint64_t params = 0;
  std::uint64_t macs = 0;
};

struct ComplexityReport {
  ModelConfig config;
  double input_seconds = 0.0;
  std::uint64_t total_params = 0;
  std::uint64_t total_macs = 0;
  std::vector<ComplexityEntry> breakdown;  // totals equal the breakdown sum
};

// Analytical parameter count; equals the instantiated model's registry total
// exactly for every valid config.
std::uint64_t count_model_params(const ModelConfig& cfg);

// Analytical multiply-accumulate count for one input of the given duration.
// Convention (matching the op-counter the reported numbers come from):
//  - LSTM, per step per direction: 4*H*(in+H) + 16*H (gate weights, gate
//    biases, cell/hidden pointwise updates)
//  - Linear: in*out per application
//  - Conv1d: C_out*C_in*W per output frame
//  - ConvTranspose1d: counted at output resolution, C_in*W per output sample
//  - LN, activations, residual adds: excluded
// Sequenced passes touch every (frame, block) position once per pass; with
// 50% block overlap that is ~2x the frame count regardless of hop.
std::uint64_t count_model_macs(const ModelConfig& cfg, double input_seconds);

ComplexityReport profile_model(const ModelConfig& cfg, double input_seconds);

std::vector<ComplexityReport> sweep(const std::vector<ModelConfig>& grid, double input_seconds);

// The twelve Table-level reference configurations (baseline first).
std::vector<ModelConfig> table2_configs();

// Rendering: ratio columns are relative to the first (baseline) row.
std::string sweep_to_csv(const std::vector<ComplexityReport>& reports);
std::string sweep_to_text(const std::vector<ComplexityReport>& reports);

}  // namespace gcsep
