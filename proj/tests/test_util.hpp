#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <functional>
#include <vector>

#include "gcsep/tensor.hpp"

namespace testutil {

// xorshift-based value source for test data; independent of the library's
// parameter initializer so tests don't accidentally mirror its stream.
struct Rng {
  std::uint64_t state;
  explicit Rng(std::uint64_t seed) : state(seed ? seed : 1) {}
  std::uint64_t next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  }
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(next() % n); }
};

inline gcsep::Tensor random_tensor(const gcsep::Shape& shape, Rng& rng, bool requires_grad,
                                   double lo = -1.0, double hi = 1.0) {
  std::vector<double> values(gcsep::shape_numel(shape));
  for (double& v : values) v = rng.uniform(lo, hi);
  return gcsep::Tensor::from_data(shape, std::move(values), requires_grad);
}

// Central finite-difference check of d(loss)/d(param) for every listed
// parameter. loss_fn must rebuild the graph from the current parameter
// values on each call. Returns the worst relative error; elements per
// tensor are subsampled down to max_checks.
inline double max_grad_rel_err(const std::vector<gcsep::Tensor>& params,
                               const std::function<gcsep::Tensor()>& loss_fn, double h = 1e-5,
                               std::size_t max_checks = 64) {
  for (const auto& p : params) {
    gcsep::Tensor t = p;
    t.zero_grad();
  }
  gcsep::Tensor loss = loss_fn();
  loss.backward();

  std::vector<std::vector<double>> analytic;
  for (const auto& p : params)
    analytic.push_back(p.has_grad() ? p.grad() : std::vector<double>(p.numel(), 0.0));

  double worst = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    gcsep::Tensor param = params[pi];
    auto& data = param.mutable_data();
    const std::size_t n = data.size();
    const std::size_t step = n > max_checks ? (n + max_checks - 1) / max_checks : 1;
    for (std::size_t j = 0; j < n; j += step) {
      const double saved = data[j];
      const double a = analytic[pi][j];
      // Central differences straddling a ReLU kink report a wrong slope for
      // that step size, so accept the best agreement over a few step sizes;
      // a genuinely wrong analytic gradient disagrees at every one.
      double best = std::numeric_limits<double>::infinity();
      for (const double step_h : {h, h * 0.1, h * 0.01, h * 0.001}) {
        data[j] = saved + step_h;
        const double up = loss_fn().item();
        data[j] = saved - step_h;
        const double dn = loss_fn().item();
        data[j] = saved;
        const double numeric = (up - dn) / (2.0 * step_h);
        const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-4});
        best = std::min(best, std::fabs(a - numeric) / denom);
        if (best < 1e-6) break;
      }
      worst = std::max(worst, best);
    }
  }
  return worst;
}

}  // namespace testutil
