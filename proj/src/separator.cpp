#include "gcsep/separator.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "gcsep/ops.hpp"

namespace gcsep {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string("config: ") + name + " must be positive");
  };
  positive(group_count, "group_count");
  positive(group_size, "group_size");
  positive(encoder_filters, "encoder_filters");
  positive(lstm_input, "lstm_input");
  positive(lstm_hidden, "lstm_hidden");
  positive(depth, "depth");
  positive(window_samples, "window_samples");
  positive(stride_samples, "stride_samples");
  positive(num_speakers, "num_speakers");
  positive(sample_rate, "sample_rate");
  if (group_count > 1) {
    if (group_count * group_size != encoder_filters) {
      throw std::invalid_argument("config: group_count*group_size must equal encoder_filters (" +
                                  std::to_string(group_count) + "*" + std::to_string(group_size) +
                                  " != " + std::to_string(encoder_filters) + ")");
    }
    if (lstm_input != group_size) {
      throw std::invalid_argument("config: lstm_input must equal group_size for grouped models");
    }
  }
}

std::size_t ModelConfig::frames_for(std::size_t samples) const {
  if (samples < window_samples) {
    throw std::invalid_argument("input too short: " + std::to_string(samples) + " samples < " +
                                std::to_string(window_samples) + " window");
  }
  return (samples - window_samples) / stride_samples + 1;
}

std::size_t ModelConfig::hop_for(std::size_t frames) const {
  if (block_hop > 0) return block_hop;
  const auto t = static_cast<std::size_t>(
      std::ceil(std::sqrt(static_cast<double>(frames) / 2.0)));
  return t > 0 ? t : 1;
}

SeparatorModel::SeparatorModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  ParamRng rng(seed);
  const std::size_t n = cfg_.encoder_filters;
  const std::size_t w = cfg_.window_samples;
  const std::size_t feat = cfg_.block_feat();

  const double enc_bound = 1.0 / std::sqrt(static_cast<double>(w));
  {
    std::vector<double> k(n * w);
    for (double& v : k) v = rng.uniform(-enc_bound, enc_bound);
    encoder_kernels = Tensor::from_data({n, 1, w}, std::move(k), true);
  }
  encoder_norm = LayerNorm(n);
  if (cfg_.group_count == 1) {
    bottleneck = Linear(n, cfg_.lstm_input, rng);
  }
  for (std::size_t b = 0; b < cfg_.depth; ++b) {
    if (cfg_.group_count > 1) {
      group_comms.emplace_back(cfg_.group_size, cfg_.lstm_hidden, rng);
    }
    blocks.emplace_back(feat, cfg_.lstm_hidden, rng);
  }
  if (cfg_.group_count > 1) {
    mask_layer = Linear(cfg_.group_size, cfg_.num_speakers * cfg_.group_size, rng);
  } else {
    mask_layer = Linear(cfg_.lstm_input, cfg_.num_speakers * n, rng);
  }
  {
    std::vector<double> k(n * w);
    for (double& v : k) v = rng.uniform(-enc_bound, enc_bound);
    decoder_kernels = Tensor::from_data({n, 1, w}, std::move(k), true);
  }

  registry_.add("encoder.weight", encoder_kernels);
  encoder_norm.register_params(registry_, "encoder.norm");
  if (cfg_.group_count == 1) bottleneck.register_params(registry_, "bottleneck");
  for (std::size_t b = 0; b < cfg_.depth; ++b) {
    const std::string prefix = "block" + std::to_string(b);
    if (cfg_.group_count > 1) group_comms[b].register_params(registry_, prefix + ".groupcomm");
    blocks[b].register_params(registry_, prefix);
  }
  mask_layer.register_params(registry_, "mask");
  registry_.add("decoder.weight", decoder_kernels);
}

Tensor SeparatorModel::encode(const Tensor& wave) const {
  if (wave.ndim() != 2 || wave.dim(0) != 1) {
    throw std::invalid_argument("encode: expected [1 x samples], got " + shape_str(wave.shape()));
  }
  cfg_.frames_for(wave.dim(1));  // length check
  return conv1d(wave, encoder_kernels, cfg_.stride_samples);
}

Tensor SeparatorModel::separator_features(const Tensor& enc) const {
  const std::size_t frames = enc.dim(1);
  // per-frame LN over the feature dimension
  Tensor normed = transpose(encoder_norm.forward(transpose(enc)));
  Tensor feat_map = normed;
  if (cfg_.group_count == 1) {
    feat_map = transpose(bottleneck.forward(transpose(normed)));
  }
  const std::size_t hop = cfg_.hop_for(frames);
  SegmentedTensor seg = segment(feat_map, hop);
  const std::size_t t2 = seg.block_len(), s = seg.block_count();
  const std::size_t k = cfg_.group_count > 1 ? cfg_.group_count : 1;
  const std::size_t m = cfg_.block_feat();
  Tensor grouped = reshape(seg.data, {k, m, t2, s});
  for (std::size_t b = 0; b < cfg_.depth; ++b) {
    if (cfg_.group_count > 1) {
      GroupedTensor gt{grouped, k, m};
      grouped = group_comms[b].communicate(gt).data;
    }
    grouped = blocks[b].forward(grouped);
  }
  SegmentedTensor merged{reshape(grouped, {k * m, t2, s}), hop, frames};
  return overlap_add(merged);
}

std::vector<Tensor> SeparatorModel::estimate_masks(const Tensor& features) const {
  const std::size_t frames = features.dim(1);
  const std::size_t n = cfg_.encoder_filters;
  const std::size_t k = cfg_.group_count > 1 ? cfg_.group_count : 1;
  const std::size_t m = cfg_.block_feat();
  const std::size_t spk = cfg_.num_speakers;
  Tensor per_group = reshape(transpose(features), {frames, k, m});
  Tensor logits = relu(mask_layer.forward(per_group));  // [frames x K x spk*width]
  const std::size_t width = cfg_.group_count > 1 ? m : n;
  std::vector<Tensor> masks;
  masks.reserve(spk);
  for (std::size_t s = 0; s < spk; ++s) {
    Tensor part = slice(logits, 2, s * width, width);  // [frames x K x width]
    masks.push_back(transpose(reshape(part, {frames, n})));
  }
  return masks;
}

Tensor SeparatorModel::separate(const Tensor& wave) const {
  const std::size_t samples = wave.dim(1);
  Tensor enc = encode(wave);
  Tensor features = separator_features(enc);
  std::vector<Tensor> masks = estimate_masks(features);
  std::vector<Tensor> outputs;
  outputs.reserve(masks.size());
  for (const Tensor& mask : masks) {
    Tensor decoded = conv1d_transpose(mul(mask, enc), decoder_kernels, cfg_.stride_samples);
    const std::size_t out_len = decoded.dim(1);
    if (out_len > samples) {
      decoded = slice(decoded, 1, 0, samples);
    } else if (out_len < samples) {
      decoded = concat({decoded, Tensor::zeros({1, samples - out_len})}, 1);
    }
    outputs.push_back(decoded);
  }
  return concat(outputs, 0);
}

}  // namespace gcsep
