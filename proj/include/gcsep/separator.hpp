#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "gcsep/dprnn.hpp"
#include "gcsep/groupcomm.hpp"
#include "gcsep/layers.hpp"
#include "gcsep/tensor.hpp"

namespace gcsep {

// Table-1 hyperparameter tuple. group_count==1 selects the ungrouped
// baseline, which keeps the encoder bottleneck; grouped models drop it and
// split the encoder output directly.
struct ModelConfig {
  std::size_t group_count = 1;     // K
  std::size_t group_size = 128;    // M (block feature width for K>1)
  std::size_t encoder_filters = 128;  // N
  std::size_t lstm_input = 64;     // H_i
  std::size_t lstm_hidden = 128;   // H_o per direction
  std::size_t depth = 6;           // stacked dual-path blocks
  std::size_t window_samples = 32;  // 2 ms at 16 kHz
  std::size_t stride_samples = 16;
  std::size_t num_speakers = 2;
  std::size_t sample_rate = 16000;
  std::size_t block_hop = 0;  // segmentation half-length T; 0 = ceil(sqrt(L/2)) per input

  void validate() const;  // throws std::invalid_argument naming the offending field
  std::size_t block_feat() const { return group_count > 1 ? group_size : lstm_input; }
  // encoder frame count for a given sample count
  std::size_t frames_for(std::size_t samples) const;
  std::size_t hop_for(std::size_t frames) const;
  bool operator==(const ModelConfig&) const = default;
};

class SeparatorModel {
public:
  SeparatorModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  ParamRegistry& registry() { return registry_; }
  const ParamRegistry& registry() const { return registry_; }

  Tensor encode(const Tensor& wave) const;  // [1 x L] -> [N x frames]

  // Masks from the separator output (merged features [feat x frames]):
  // num_speakers nonnegative masks, each [N x frames].
  std::vector<Tensor> estimate_masks(const Tensor& features) const;

  // Full pipeline; wave [1 x L] -> [num_speakers x L].
  Tensor separate(const Tensor& wave) const;

  // separator front half: encoder output -> merged feature map [feat x frames]
  Tensor separator_features(const Tensor& enc) const;

  Tensor encoder_kernels;  // [N x 1 x W]
  LayerNorm encoder_norm;
  Linear bottleneck;  // baseline only
  std::vector<GroupComm> group_comms;  // per block, K>1 only
  std::vector<DprnnBlock> blocks;
  Linear mask_layer;  // shared across groups: M -> n_spk*M (K>1) or H_i -> n_spk*N
  Tensor decoder_kernels;  // [N x 1 x W]

private:
  ModelConfig cfg_;
  ParamRegistry registry_;
};

}  // namespace gcsep
