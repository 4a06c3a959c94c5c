#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gcsep/tensor.hpp"

namespace gcsep {

// Deterministic parameter RNG. Hand-rolled uniform mapping so streams are
// reproducible independent of the standard library's distribution details.
class ParamRng {
public:
  explicit ParamRng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next_u64();
  double uniform(double lo, double hi);

private:
  std::uint64_t state_;
};

// Named, ordered collection of every trainable tensor of a model.
class ParamRegistry {
public:
  void add(const std::string& name, const Tensor& param);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t total_params() const;
  void zero_grad();

private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

class Linear {
public:
  Linear() = default;
  Linear(std::size_t in_dim, std::size_t out_dim, ParamRng& rng);
  static Linear zeros(std::size_t in_dim, std::size_t out_dim);

  // x: [... x in]; applied to the trailing dimension.
  Tensor forward(const Tensor& x) const;
  void register_params(ParamRegistry& reg, const std::string& prefix) const;
  std::size_t param_count() const;

  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const { return out_dim_; }
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

private:
  std::size_t in_dim_ = 0, out_dim_ = 0;
};

class LayerNorm {
public:
  LayerNorm() = default;
  explicit LayerNorm(std::size_t dim);  // gain=1, bias=0

  Tensor forward(const Tensor& x) const;  // normalizes the trailing dimension
  void register_params(ParamRegistry& reg, const std::string& prefix) const;
  std::size_t param_count() const { return 2 * dim_; }

  static constexpr double kEps = 1e-8;
  Tensor gain;
  Tensor bias;

private:
  std::size_t dim_ = 0;
};

// Single-direction LSTM. Gate order (input, forget, cell, output); weights
// follow the split w_ih/w_hh layout with separate input and hidden biases.
class LstmLayer {
public:
  LstmLayer() = default;
  LstmLayer(std::size_t input_dim, std::size_t hidden_dim, ParamRng& rng);

  // seq: [B x len x input]; zero initial state; returns [B x len x hidden].
  Tensor forward(const Tensor& seq) const;
  // One recurrence step: x [B x input], h/c [B x hidden].
  std::pair<Tensor, Tensor> step(const Tensor& x, const Tensor& h, const Tensor& c,
                                 const Tensor& w_ih_t, const Tensor& w_hh_t) const;

  void register_params(ParamRegistry& reg, const std::string& prefix) const;
  std::size_t param_count() const;
  static std::size_t param_count(std::size_t input_dim, std::size_t hidden_dim);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t hidden_dim() const { return hidden_dim_; }

  Tensor w_ih;  // [4H x input]
  Tensor w_hh;  // [4H x H]
  Tensor b_ih;  // [4H], forget-gate slice initialized to +1
  Tensor b_hh;  // [4H]

private:
  std::size_t input_dim_ = 0, hidden_dim_ = 0;
};

// Bidirectional LSTM; hidden_dim is PER DIRECTION, output dim is 2*hidden.
class Blstm {
public:
  Blstm() = default;
  Blstm(std::size_t input_dim, std::size_t hidden_dim, ParamRng& rng);

  Tensor forward(const Tensor& seq) const;  // [B x len x in] -> [B x len x 2H]
  void register_params(ParamRegistry& reg, const std::string& prefix) const;
  std::size_t param_count() const { return fwd.param_count() + bwd.param_count(); }

  LstmLayer fwd;
  LstmLayer bwd;
};

}  // namespace gcsep
