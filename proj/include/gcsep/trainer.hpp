#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gcsep/layers.hpp"
#include "gcsep/separator.hpp"
#include "gcsep/tensor.hpp"

namespace gcsep {

struct TrainConfig {
  double initial_lr = 0.001;
  double lr_decay = 0.98;          // per two epochs
  std::size_t max_epochs = 100;
  double clip_norm = 5.0;
  std::size_t patience = 10;       // epochs without a new best validation model
  std::size_t batch_size = 2;      // utterances per optimizer step
  std::uint64_t seed = 1;

  void validate() const;
};

// Two band-disjoint amplitude-modulated tone sources and their sum; the
// desk-scale stand-in for a separation corpus. Deterministic per seed,
// mixture == source1 + source2 exactly, peak <= 1.
struct ToyMixture {
  std::vector<double> mixture;
  std::vector<double> source1;
  std::vector<double> source2;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
};

ToyMixture generate_toy_mixture(std::uint64_t seed, double duration_s, std::size_t sample_rate);

double lr_at(std::size_t epoch, const TrainConfig& cfg);

// Scales all gradients by max_norm/g when the global L2 norm g exceeds
// max_norm. Throws on non-finite gradients.
void clip_global_norm(ParamRegistry& registry, double max_norm);

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// Bias-corrected Adam update applied in place to the registry's parameters.
void adam_step(ParamRegistry& registry, AdamState& state, double lr);

struct EpochRecord {
  std::size_t epoch;
  double lr;
  double train_loss;
  double valid_sisdr;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::map<std::string, std::vector<double>> best_checkpoint;  // registry-name -> values
  double best_valid_sisdr = 0.0;
  std::size_t best_epoch = 0;
  bool diverged = false;  // NaN loss; best_checkpoint holds the last good state
};

// history CSV with a fixed header: epoch,lr,train_loss,valid_sisdr
std::string history_to_csv(const std::vector<EpochRecord>& history);

TrainResult train(SeparatorModel& model, const std::vector<ToyMixture>& train_set,
                  const std::vector<ToyMixture>& valid_set, const TrainConfig& cfg);

// mean PIT SI-SDR of the model's estimates over a set
double evaluate_si_sdr(const SeparatorModel& model, const std::vector<ToyMixture>& set);

// mean PIT SI-SDR of the unprocessed mixture against the references
double mixture_si_sdr(const std::vector<ToyMixture>& set);

}  // namespace gcsep
