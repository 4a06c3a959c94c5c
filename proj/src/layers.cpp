#include "gcsep/layers.hpp"

#include <cmath>
#include <stdexcept>

#include "gcsep/ops.hpp"

namespace gcsep {

std::uint64_t ParamRng::next_u64() {
  // splitmix64
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double ParamRng::uniform(double lo, double hi) {
  const double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

void ParamRegistry::add(const std::string& name, const Tensor& param) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  entries_.emplace_back(name, param);
}

const Tensor& ParamRegistry::get(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::invalid_argument("unknown parameter name: " + name);
}

bool ParamRegistry::contains(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return true;
  }
  return false;
}

std::size_t ParamRegistry::total_params() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.numel();
  return n;
}

void ParamRegistry::zero_grad() {
  for (auto& [name, t] : entries_) {
    Tensor tensor = t;
    tensor.zero_grad();
  }
}

namespace {

Tensor uniform_init(const Shape& shape, double bound, ParamRng& rng) {
  std::vector<double> values(shape_numel(shape));
  for (double& v : values) v = rng.uniform(-bound, bound);
  return Tensor::from_data(shape, std::move(values), /*requires_grad=*/true);
}

}  // namespace

Linear::Linear(std::size_t in_dim, std::size_t out_dim, ParamRng& rng)
    : in_dim_(in_dim), out_dim_(out_dim) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
  weight = uniform_init({out_dim, in_dim}, bound, rng);
  bias = Tensor::zeros({out_dim}, /*requires_grad=*/true);
}

Linear Linear::zeros(std::size_t in_dim, std::size_t out_dim) {
  Linear l;
  l.in_dim_ = in_dim;
  l.out_dim_ = out_dim;
  l.weight = Tensor::zeros({out_dim, in_dim}, true);
  l.bias = Tensor::zeros({out_dim}, true);
  return l;
}

Tensor Linear::forward(const Tensor& x) const {
  if (x.shape().back() != in_dim_) {
    throw std::invalid_argument("linear: trailing dim of " + shape_str(x.shape()) +
                                " does not match input dim " + std::to_string(in_dim_));
  }
  const std::size_t rows = x.numel() / in_dim_;
  Tensor flat = reshape(x, {rows, in_dim_});
  Tensor y = add(matmul(flat, transpose(weight)), bias);
  Shape out_shape = x.shape();
  out_shape.back() = out_dim_;
  return reshape(y, out_shape);
}

void Linear::register_params(ParamRegistry& reg, const std::string& prefix) const {
  reg.add(prefix + ".weight", weight);
  reg.add(prefix + ".bias", bias);
}

std::size_t Linear::param_count() const { return out_dim_ * in_dim_ + out_dim_; }

LayerNorm::LayerNorm(std::size_t dim) : dim_(dim) {
  gain = Tensor::full({dim}, 1.0, true);
  bias = Tensor::zeros({dim}, true);
}

Tensor LayerNorm::forward(const Tensor& x) const { return layer_norm(x, gain, bias, kEps); }

void LayerNorm::register_params(ParamRegistry& reg, const std::string& prefix) const {
  reg.add(prefix + ".gain", gain);
  reg.add(prefix + ".bias", bias);
}

LstmLayer::LstmLayer(std::size_t input_dim, std::size_t hidden_dim, ParamRng& rng)
    : input_dim_(input_dim), hidden_dim_(hidden_dim) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim + hidden_dim));
  w_ih = uniform_init({4 * hidden_dim, input_dim}, bound, rng);
  w_hh = uniform_init({4 * hidden_dim, hidden_dim}, bound, rng);
  b_ih = Tensor::zeros({4 * hidden_dim}, true);
  b_hh = Tensor::zeros({4 * hidden_dim}, true);
  // forget-gate bias offset
  for (std::size_t j = hidden_dim; j < 2 * hidden_dim; ++j) b_ih.mutable_data()[j] = 1.0;
}

std::pair<Tensor, Tensor> LstmLayer::step(const Tensor& x, const Tensor& h, const Tensor& c,
                                          const Tensor& w_ih_t, const Tensor& w_hh_t) const {
  const std::size_t hd = hidden_dim_;
  Tensor gates = add(add(matmul(x, w_ih_t), matmul(h, w_hh_t)), add(b_ih, b_hh));
  Tensor i_gate = sigmoid(slice(gates, 1, 0, hd));
  Tensor f_gate = sigmoid(slice(gates, 1, hd, hd));
  Tensor g_cand = tanh_op(slice(gates, 1, 2 * hd, hd));
  Tensor o_gate = sigmoid(slice(gates, 1, 3 * hd, hd));
  Tensor c_new = add(mul(f_gate, c), mul(i_gate, g_cand));
  Tensor h_new = mul(o_gate, tanh_op(c_new));
  return {h_new, c_new};
}

Tensor LstmLayer::forward(const Tensor& seq) const {
  if (seq.ndim() != 3 || seq.dim(2) != input_dim_) {
    throw std::invalid_argument("lstm: expected [B x len x " + std::to_string(input_dim_) +
                                "], got " + shape_str(seq.shape()));
  }
  const std::size_t batch = seq.dim(0), len = seq.dim(1);
  if (len == 0) throw std::invalid_argument("lstm: empty sequence");
  Tensor w_ih_t = transpose(w_ih);
  Tensor w_hh_t = transpose(w_hh);
  Tensor h = Tensor::zeros({batch, hidden_dim_});
  Tensor c = Tensor::zeros({batch, hidden_dim_});
  std::vector<Tensor> outputs;
  outputs.reserve(len);
  for (std::size_t t = 0; t < len; ++t) {
    Tensor x_t = reshape(slice(seq, 1, t, 1), {batch, input_dim_});
    auto [h_new, c_new] = step(x_t, h, c, w_ih_t, w_hh_t);
    h = h_new;
    c = c_new;
    outputs.push_back(reshape(h, {batch, 1, hidden_dim_}));
  }
  return concat(outputs, 1);
}

void LstmLayer::register_params(ParamRegistry& reg, const std::string& prefix) const {
  reg.add(prefix + ".w_ih", w_ih);
  reg.add(prefix + ".w_hh", w_hh);
  reg.add(prefix + ".b_ih", b_ih);
  reg.add(prefix + ".b_hh", b_hh);
}

std::size_t LstmLayer::param_count() const { return param_count(input_dim_, hidden_dim_); }

std::size_t LstmLayer::param_count(std::size_t input_dim, std::size_t hidden_dim) {
  return 4 * hidden_dim * (input_dim + hidden_dim) + 8 * hidden_dim;
}

Blstm::Blstm(std::size_t input_dim, std::size_t hidden_dim, ParamRng& rng)
    : fwd(input_dim, hidden_dim, rng), bwd(input_dim, hidden_dim, rng) {}

Tensor Blstm::forward(const Tensor& seq) const {
  Tensor forward_out = fwd.forward(seq);
  Tensor backward_out = flip(bwd.forward(flip(seq, 1)), 1);
  return concat({forward_out, backward_out}, 2);
}

void Blstm::register_params(ParamRegistry& reg, const std::string& prefix) const {
  fwd.register_params(reg, prefix + ".fwd");
  bwd.register_params(reg, prefix + ".bwd");
}

}  // namespace gcsep
