#pragma once

#include <vector>

#include "gcsep/tensor.hpp"

namespace gcsep {

// Both metrics are capped to +/-80 dB by an epsilon of 1e-8 inside the log
// so perfect reconstruction stays finite.
inline constexpr double kMetricEps = 1e-8;

// 10*log10(||ref||^2 / (||ref-est||^2 + eps*||ref||^2)); no mean removal.
double snr_db(const std::vector<double>& est, const std::vector<double>& ref);

// Scale-invariant SDR: both signals are mean-removed, the estimate is
// projected onto the reference, and the ratio is epsilon-capped on both ends.
double si_sdr_db(const std::vector<double>& est, const std::vector<double>& ref);

// Differentiable SNR of one source; ref is treated as constant.
Tensor snr_db_tensor(const Tensor& est, const Tensor& ref);

struct PitResult {
  Tensor loss;     // scalar: -max over permutations of mean per-source SNR
  bool swapped;    // chosen source-to-reference assignment (2 speakers)
};

// Utterance-level permutation-invariant SNR loss for 2 speakers; ties prefer
// the identity permutation. estimates/references: [2 x len].
PitResult pit_snr_loss(const Tensor& estimates, const Tensor& references);

struct PitSiSdr {
  double mean_db;
  double per_source[2];
  bool swapped;
};

// Best-permutation mean SI-SDR over 2 sources (evaluation only).
PitSiSdr pit_si_sdr(const std::vector<double>& est1, const std::vector<double>& est2,
                    const std::vector<double>& ref1, const std::vector<double>& ref2);

}  // namespace gcsep
