#include "gcsep/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "gcsep/metrics.hpp"
#include "gcsep/ops.hpp"

namespace gcsep {

void TrainConfig::validate() const {
  if (initial_lr <= 0.0) throw std::invalid_argument("TrainConfig: initial_lr must be positive");
  if (lr_decay <= 0.0 || lr_decay > 1.0)
    throw std::invalid_argument("TrainConfig: lr_decay must be in (0, 1]");
  if (max_epochs == 0) throw std::invalid_argument("TrainConfig: max_epochs must be positive");
  if (clip_norm <= 0.0) throw std::invalid_argument("TrainConfig: clip_norm must be positive");
  if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be positive");
}

ToyMixture generate_toy_mixture(std::uint64_t seed, double duration_s, std::size_t sample_rate) {
  if (duration_s <= 0.0) throw std::invalid_argument("toy mixture: duration must be positive");
  if (sample_rate == 0) throw std::invalid_argument("toy mixture: sample_rate must be positive");
  const std::size_t len = static_cast<std::size_t>(duration_s * static_cast<double>(sample_rate));
  if (len == 0) throw std::invalid_argument("toy mixture: duration too short for sample rate");

  ParamRng rng(seed * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL);
  const double two_pi = 2.0 * 3.14159265358979323846;

  // Two harmonic tones in disjoint bands (<=1200 Hz vs >=1300 Hz) with slow
  // amplitude modulation, so an ideal mask exists and SNR is well defined.
  auto render = [&](double f0_lo, double f0_hi) {
    const double f0 = rng.uniform(f0_lo, f0_hi);
    const double fm = rng.uniform(1.0, 6.0);
    const double mod_phase = rng.uniform(0.0, two_pi);
    double phases[3], amps[3] = {1.0, 0.5, 0.25};
    for (int k = 0; k < 3; ++k) phases[k] = rng.uniform(0.0, two_pi);
    std::vector<double> out(len);
    double peak = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / static_cast<double>(sample_rate);
      double v = 0.0;
      for (int k = 0; k < 3; ++k)
        v += amps[k] * std::sin(two_pi * f0 * (k + 1) * t + phases[k]);
      v *= 0.55 + 0.45 * std::sin(two_pi * fm * t + mod_phase);
      out[i] = v;
      peak = std::max(peak, std::fabs(v));
    }
    const double gain = peak > 0.0 ? 0.45 / peak : 0.0;
    for (double& v : out) v *= gain;
    return out;
  };

  ToyMixture mix;
  mix.seed = seed;
  mix.duration_s = duration_s;
  mix.source1 = render(300.0, 400.0);
  mix.source2 = render(1300.0, 1700.0);
  mix.mixture.resize(len);
  for (std::size_t i = 0; i < len; ++i) mix.mixture[i] = mix.source1[i] + mix.source2[i];
  return mix;
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  return cfg.initial_lr * std::pow(cfg.lr_decay, static_cast<double>(epoch / 2));
}

void clip_global_norm(ParamRegistry& registry, double max_norm) {
  double sq = 0.0;
  for (const auto& [name, param] : registry.entries()) {
    if (!param.has_grad()) continue;
    for (double g : param.grad()) {
      if (!std::isfinite(g))
        throw std::runtime_error("non-finite gradient in parameter '" + name + "'");
      sq += g * g;
    }
  }
  const double norm = std::sqrt(sq);
  if (norm <= max_norm) return;
  const double scale = max_norm / norm;
  for (const auto& entry : registry.entries()) {
    Tensor param = entry.second;  // shared handle
    if (!param.has_grad()) continue;
    for (double& g : param.grad_buffer()) g *= scale;
  }
}

void adam_step(ParamRegistry& registry, AdamState& state, double lr) {
  const auto& entries = registry.entries();
  if (state.m.empty()) {
    state.m.resize(entries.size());
    state.v.resize(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
      state.m[i].assign(entries[i].second.numel(), 0.0);
      state.v[i].assign(entries[i].second.numel(), 0.0);
    }
  }
  if (state.m.size() != entries.size())
    throw std::runtime_error("adam_step: optimizer state does not match registry");
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor param = entries[i].second;
    if (!param.has_grad()) continue;
    const auto& grad = param.grad();
    auto& data = param.mutable_data();
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * grad[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * grad[j] * grad[j];
      data[j] -= lr * (m[j] / bc1) / (std::sqrt(v[j] / bc2) + state.eps);
    }
  }
}

std::string history_to_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,lr,train_loss,valid_sisdr\n";
  char buf[160];
  for (const auto& rec : history) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", rec.epoch, rec.lr, rec.train_loss,
                  rec.valid_sisdr);
    out += buf;
  }
  return out;
}

namespace {

std::map<std::string, std::vector<double>> snapshot(const ParamRegistry& registry) {
  std::map<std::string, std::vector<double>> snap;
  for (const auto& [name, param] : registry.entries()) snap[name] = param.data();
  return snap;
}

void restore(ParamRegistry& registry, const std::map<std::string, std::vector<double>>& snap) {
  for (const auto& entry : registry.entries()) {
    Tensor param = entry.second;
    auto it = snap.find(entry.first);
    if (it == snap.end())
      throw std::runtime_error("checkpoint is missing parameter '" + entry.first + "'");
    if (it->second.size() != param.numel())
      throw std::runtime_error("checkpoint size mismatch for parameter '" + entry.first + "'");
    param.mutable_data() = it->second;
  }
}

Tensor references_tensor(const ToyMixture& item) {
  std::vector<double> values;
  values.reserve(2 * item.source1.size());
  values.insert(values.end(), item.source1.begin(), item.source1.end());
  values.insert(values.end(), item.source2.begin(), item.source2.end());
  return Tensor::from_data({2, item.source1.size()}, std::move(values));
}

}  // namespace

double evaluate_si_sdr(const SeparatorModel& model, const std::vector<ToyMixture>& set) {
  if (set.empty()) throw std::invalid_argument("evaluate_si_sdr: empty set");
  double total = 0.0;
  for (const auto& item : set) {
    Tensor wave = Tensor::from_data({1, item.mixture.size()}, item.mixture);
    Tensor est = model.separate(wave);
    const std::size_t len = item.mixture.size();
    const auto& d = est.data();
    std::vector<double> e1(d.begin(), d.begin() + len);
    std::vector<double> e2(d.begin() + len, d.begin() + 2 * len);
    total += pit_si_sdr(e1, e2, item.source1, item.source2).mean_db;
  }
  return total / static_cast<double>(set.size());
}

double mixture_si_sdr(const std::vector<ToyMixture>& set) {
  if (set.empty()) throw std::invalid_argument("mixture_si_sdr: empty set");
  double total = 0.0;
  for (const auto& item : set)
    total += pit_si_sdr(item.mixture, item.mixture, item.source1, item.source2).mean_db;
  return total / static_cast<double>(set.size());
}

TrainResult train(SeparatorModel& model, const std::vector<ToyMixture>& train_set,
                  const std::vector<ToyMixture>& valid_set, const TrainConfig& cfg) {
  cfg.validate();
  if (train_set.empty() || valid_set.empty())
    throw std::invalid_argument("train: empty dataset");

  TrainResult result;
  AdamState adam;
  result.best_checkpoint = snapshot(model.registry());
  result.best_valid_sisdr = -1e300;
  std::size_t stale_epochs = 0;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    const double lr = lr_at(epoch, cfg);
    double loss_sum = 0.0;
    bool bad = false;

    for (std::size_t start = 0; start < train_set.size() && !bad; start += cfg.batch_size) {
      const std::size_t end = std::min(start + cfg.batch_size, train_set.size());
      model.registry().zero_grad();
      Tensor batch_loss = Tensor::scalar(0.0);
      for (std::size_t i = start; i < end; ++i) {
        const auto& item = train_set[i];
        Tensor wave = Tensor::from_data({1, item.mixture.size()}, item.mixture);
        Tensor est = model.separate(wave);
        batch_loss = add(batch_loss, pit_snr_loss(est, references_tensor(item)).loss);
      }
      batch_loss = scale(batch_loss, 1.0 / static_cast<double>(end - start));
      const double loss_val = batch_loss.item();
      if (!std::isfinite(loss_val)) {
        bad = true;
        break;
      }
      loss_sum += loss_val * static_cast<double>(end - start);
      batch_loss.backward();
      try {
        clip_global_norm(model.registry(), cfg.clip_norm);
      } catch (const std::runtime_error&) {
        bad = true;
        break;
      }
      adam_step(model.registry(), adam, lr);
    }

    if (bad) {
      result.diverged = true;
      break;
    }

    const double train_loss = loss_sum / static_cast<double>(train_set.size());
    const double valid = evaluate_si_sdr(model, valid_set);
    result.history.push_back({epoch, lr, train_loss, valid});

    if (valid > result.best_valid_sisdr) {
      result.best_valid_sisdr = valid;
      result.best_epoch = epoch;
      result.best_checkpoint = snapshot(model.registry());
      stale_epochs = 0;
    } else if (++stale_epochs >= cfg.patience) {
      break;
    }
  }

  restore(model.registry(), result.best_checkpoint);
  return result;
}

}  // namespace gcsep
