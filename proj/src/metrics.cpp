#include "gcsep/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "gcsep/ops.hpp"

namespace gcsep {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void check_lengths(const std::vector<double>& est, const std::vector<double>& ref) {
  if (est.size() != ref.size() || est.empty()) {
    throw std::invalid_argument("metric: signal lengths differ or are empty");
  }
}

}  // namespace

double snr_db(const std::vector<double>& est, const std::vector<double>& ref) {
  check_lengths(est, ref);
  const double ref_ss = dot(ref, ref);
  if (ref_ss == 0.0) throw std::invalid_argument("snr: zero reference signal");
  double err_ss = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref[i] - est[i];
    err_ss += d * d;
  }
  return 10.0 * std::log10(ref_ss / (err_ss + kMetricEps * ref_ss));
}

double si_sdr_db(const std::vector<double>& est, const std::vector<double>& ref) {
  check_lengths(est, ref);
  const std::size_t n = ref.size();
  double est_mean = 0.0, ref_mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    est_mean += est[i];
    ref_mean += ref[i];
  }
  est_mean /= static_cast<double>(n);
  ref_mean /= static_cast<double>(n);
  double ref_ss = 0.0, proj = 0.0, est_ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = est[i] - est_mean, r = ref[i] - ref_mean;
    ref_ss += r * r;
    proj += e * r;
    est_ss += e * e;
  }
  if (ref_ss == 0.0 || est_ss == 0.0) {
    throw std::invalid_argument("si_sdr: zero signal after mean removal");
  }
  const double alpha = proj / ref_ss;
  const double target_ss = alpha * alpha * ref_ss;  // ||s_t||^2
  double err_ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = est[i] - est_mean, r = ref[i] - ref_mean;
    const double d = e - alpha * r;
    err_ss += d * d;
  }
  double ratio = target_ss / (err_ss + kMetricEps * target_ss);
  if (!(ratio > kMetricEps)) ratio = kMetricEps;  // orthogonal estimate -> -80 dB
  return 10.0 * std::log10(ratio);
}

Tensor snr_db_tensor(const Tensor& est, const Tensor& ref) {
  if (est.numel() != ref.numel()) {
    throw std::invalid_argument("snr: shape mismatch " + shape_str(est.shape()) + " vs " +
                                shape_str(ref.shape()));
  }
  double ref_ss_v = 0.0;
  for (double r : ref.data()) ref_ss_v += r * r;
  if (ref_ss_v == 0.0) throw std::invalid_argument("snr: zero reference signal");
  Tensor diff = sub(ref, est);
  Tensor err_ss = sum(mul(diff, diff));
  Tensor den = add_scalar(err_ss, kMetricEps * ref_ss_v);
  // 10*log10(ref_ss) - 10*log10(err_ss + eps*ref_ss)
  const double scale_db = 10.0 / std::log(10.0);
  return scale(sub(Tensor::scalar(std::log(ref_ss_v)), log_op(den)), scale_db);
}

PitResult pit_snr_loss(const Tensor& estimates, const Tensor& references) {
  if (estimates.ndim() != 2 || references.ndim() != 2 || estimates.dim(0) != 2 ||
      references.dim(0) != 2 || estimates.dim(1) != references.dim(1)) {
    throw std::invalid_argument("pit_snr_loss: expected matching [2 x len] tensors, got " +
                                shape_str(estimates.shape()) + " and " +
                                shape_str(references.shape()));
  }
  const std::size_t len = estimates.dim(1);
  Tensor est0 = slice(estimates, 0, 0, 1);
  Tensor est1 = slice(estimates, 0, 1, 1);
  Tensor ref0 = slice(references, 0, 0, 1);
  Tensor ref1 = slice(references, 0, 1, 1);
  (void)len;
  Tensor identity = scale(add(snr_db_tensor(est0, ref0), snr_db_tensor(est1, ref1)), 0.5);
  Tensor swapped = scale(add(snr_db_tensor(est0, ref1), snr_db_tensor(est1, ref0)), 0.5);
  PitResult result;
  // ties prefer the identity permutation
  if (swapped.item() > identity.item()) {
    result.loss = neg(swapped);
    result.swapped = true;
  } else {
    result.loss = neg(identity);
    result.swapped = false;
  }
  return result;
}

PitSiSdr pit_si_sdr(const std::vector<double>& est1, const std::vector<double>& est2,
                    const std::vector<double>& ref1, const std::vector<double>& ref2) {
  const double a0 = si_sdr_db(est1, ref1), a1 = si_sdr_db(est2, ref2);
  const double b0 = si_sdr_db(est1, ref2), b1 = si_sdr_db(est2, ref1);
  PitSiSdr out{};
  if ((b0 + b1) > (a0 + a1)) {
    out.swapped = true;
    out.per_source[0] = b0;
    out.per_source[1] = b1;
  } else {
    out.swapped = false;
    out.per_source[0] = a0;
    out.per_source[1] = a1;
  }
  out.mean_db = 0.5 * (out.per_source[0] + out.per_source[1]);
  return out;
}

}  // namespace gcsep
