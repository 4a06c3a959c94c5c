#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gcsep/layers.hpp"
#include "gcsep/separator.hpp"
#include "gcsep/trainer.hpp"

namespace gcsep {

struct WavData {
  std::vector<double> samples;  // mono, in [-1, 1] for PCM16
  std::size_t sample_rate = 0;
};

// Mono RIFF/WAVE only; PCM16 or IEEE float32. Anything else (stereo,
// other bit depths, truncated files) raises std::runtime_error.
WavData read_wav(const std::string& path);
void write_wav(const std::string& path, const WavData& wav);  // PCM16, clamps to [-1, 1]

// Text checkpoint: model config header plus every registry tensor with its
// shape, values printed with %.17g so a round trip is bit-exact.
void save_checkpoint(const std::string& path, const SeparatorModel& model);
ModelConfig load_checkpoint(const std::string& path,
                            std::map<std::string, std::vector<double>>& params_out);
// Builds a model from the stored config and loads its weights.
SeparatorModel load_model(const std::string& path);

// Flat "key = value" run config covering ModelConfig and TrainConfig fields.
// '#' comments and blank lines are ignored; unknown keys are errors.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  double duration_s = 1.0;
  std::size_t train_items = 20;
  std::size_t valid_items = 4;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string serialize_run_config(const RunConfig& cfg);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace gcsep
