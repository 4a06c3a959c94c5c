#include <cmath>
#include <vector>

#include "doctest.h"
#include "gcsep/layers.hpp"
#include "gcsep/ops.hpp"
#include "test_util.hpp"

using namespace gcsep;

namespace {

// Independent scalar-loop LSTM: gate order (input, forget, cell, output),
// two bias vectors, zero initial state.
std::vector<double> lstm_oracle(const std::vector<double>& seq, std::size_t len, std::size_t in,
                                std::size_t hid, const LstmLayer& layer) {
  const auto& w_ih = layer.w_ih.data();
  const auto& w_hh = layer.w_hh.data();
  const auto& b_ih = layer.b_ih.data();
  const auto& b_hh = layer.b_hh.data();
  std::vector<double> h(hid, 0.0), c(hid, 0.0), out;
  for (std::size_t t = 0; t < len; ++t) {
    std::vector<double> gates(4 * hid);
    for (std::size_t r = 0; r < 4 * hid; ++r) {
      double acc = b_ih[r] + b_hh[r];
      for (std::size_t j = 0; j < in; ++j) acc += w_ih[r * in + j] * seq[t * in + j];
      for (std::size_t j = 0; j < hid; ++j) acc += w_hh[r * hid + j] * h[j];
      gates[r] = acc;
    }
    std::vector<double> h_new(hid), c_new(hid);
    for (std::size_t j = 0; j < hid; ++j) {
      const double ig = 1.0 / (1.0 + std::exp(-gates[j]));
      const double fg = 1.0 / (1.0 + std::exp(-gates[hid + j]));
      const double gg = std::tanh(gates[2 * hid + j]);
      const double og = 1.0 / (1.0 + std::exp(-gates[3 * hid + j]));
      c_new[j] = fg * c[j] + ig * gg;
      h_new[j] = og * std::tanh(c_new[j]);
    }
    h = h_new;
    c = c_new;
    out.insert(out.end(), h.begin(), h.end());
  }
  return out;
}

void zero_params(LstmLayer& layer) {
  for (Tensor t : {layer.w_ih, layer.w_hh, layer.b_ih, layer.b_hh})
    std::fill(t.mutable_data().begin(), t.mutable_data().end(), 0.0);
}

}  // namespace

TEST_CASE("lstm zero-weight algebra") {
  ParamRng rng(3);
  LstmLayer layer(2, 3, rng);
  zero_params(layer);

  // gates are all 0.5, candidate 0: from zero state everything stays zero
  Tensor x = Tensor::from_data({1, 1, 2}, {0.7, -0.3});
  Tensor h0 = Tensor::zeros({1, 3});
  Tensor c0 = Tensor::zeros({1, 3});
  Tensor w_ih_t = transpose(layer.w_ih);
  Tensor w_hh_t = transpose(layer.w_hh);
  auto [h1, c1] = layer.step(reshape(x, {1, 2}), h0, c0, w_ih_t, w_hh_t);
  for (double v : h1.data()) CHECK(v == doctest::Approx(0.0));
  for (double v : c1.data()) CHECK(v == doctest::Approx(0.0));

  // nonzero initial cell: c' = 0.5*c0, h' = 0.5*tanh(0.5*c0)
  Tensor c_init = Tensor::from_data({1, 3}, {0.4, -1.0, 2.0});
  auto [h2, c2] = layer.step(reshape(x, {1, 2}), h0, c_init, w_ih_t, w_hh_t);
  for (std::size_t j = 0; j < 3; ++j) {
    const double c0v = c_init.data()[j];
    CHECK(c2.data()[j] == doctest::Approx(0.5 * c0v).epsilon(1e-12));
    CHECK(h2.data()[j] == doctest::Approx(0.5 * std::tanh(0.5 * c0v)).epsilon(1e-12));
  }
}

TEST_CASE("lstm matches the scalar-loop oracle") {
  ParamRng rng(91);
  LstmLayer layer(2, 2, rng);
  testutil::Rng vrng(12);
  const std::size_t len = 5;
  Tensor seq = testutil::random_tensor({1, len, 2}, vrng, false);
  Tensor out = layer.forward(seq);
  const auto oracle = lstm_oracle(seq.data(), len, 2, 2, layer);
  REQUIRE(out.numel() == oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i)
    CHECK(out.data()[i] == doctest::Approx(oracle[i]).epsilon(1e-10));
}

TEST_CASE("lstm batching equals per-sequence runs") {
  ParamRng rng(77);
  LstmLayer layer(3, 4, rng);
  testutil::Rng vrng(13);
  Tensor batch = testutil::random_tensor({3, 6, 3}, vrng, false);
  Tensor all = layer.forward(batch);
  for (std::size_t b = 0; b < 3; ++b) {
    Tensor one = layer.forward(slice(batch, 0, b, 1));
    for (std::size_t i = 0; i < one.numel(); ++i)
      CHECK(one.data()[i] == doctest::Approx(all.data()[b * one.numel() + i]).epsilon(1e-12));
  }
}

TEST_CASE("blstm length-1 and oracle checks") {
  ParamRng rng(5);
  Blstm blstm(2, 3, rng);
  testutil::Rng vrng(14);

  Tensor single = testutil::random_tensor({1, 1, 2}, vrng, false);
  Tensor out = blstm.forward(single);
  REQUIRE(out.shape() == Shape{1, 1, 6});
  Tensor fwd = blstm.fwd.forward(single);
  Tensor bwd = blstm.bwd.forward(single);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(out.data()[j] == doctest::Approx(fwd.data()[j]));
    CHECK(out.data()[3 + j] == doctest::Approx(bwd.data()[j]));
  }

  // len=3 against the scalar oracle in both directions
  Tensor seq = testutil::random_tensor({1, 3, 2}, vrng, false);
  Tensor full = blstm.forward(seq);
  const auto fwd_o = lstm_oracle(seq.data(), 3, 2, 3, blstm.fwd);
  std::vector<double> rseq(6);  // time-reversed copy, feature order intact
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t f = 0; f < 2; ++f) rseq[t * 2 + f] = seq.data()[(2 - t) * 2 + f];
  const auto bwd_o = lstm_oracle(rseq, 3, 2, 3, blstm.bwd);
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(full.data()[t * 6 + j] == doctest::Approx(fwd_o[t * 3 + j]).epsilon(1e-10));
      CHECK(full.data()[t * 6 + 3 + j] ==
            doctest::Approx(bwd_o[(2 - t) * 3 + j]).epsilon(1e-10));
    }
}

TEST_CASE("blstm palindrome symmetry with tied directions") {
  ParamRng rng(6);
  Blstm blstm(2, 3, rng);
  for (auto [dst, src] : {std::pair{blstm.bwd.w_ih, blstm.fwd.w_ih},
                          std::pair{blstm.bwd.w_hh, blstm.fwd.w_hh},
                          std::pair{blstm.bwd.b_ih, blstm.fwd.b_ih},
                          std::pair{blstm.bwd.b_hh, blstm.fwd.b_hh}}) {
    Tensor d = dst;
    d.mutable_data() = src.data();
  }
  Tensor seq = Tensor::from_data({1, 3, 2}, {1, 2, 5, -1, 1, 2});  // palindrome over time
  Tensor out = blstm.forward(seq);
  // time-reversed output with fwd/bwd halves swapped equals the output
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(out.data()[t * 6 + j] == doctest::Approx(out.data()[(2 - t) * 6 + 3 + j]));
      CHECK(out.data()[t * 6 + 3 + j] == doctest::Approx(out.data()[(2 - t) * 6 + j]));
    }
}

TEST_CASE("linear and layer norm basics") {
  Linear ident = Linear::zeros(3, 3);
  Tensor w = ident.weight;
  for (std::size_t i = 0; i < 3; ++i) w.mutable_data()[i * 3 + i] = 1.0;
  Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(ident.forward(x).data() == x.data());

  LayerNorm ln(3);
  Tensor y = ln.forward(Tensor::from_data({3}, {5, 5, 5}));
  for (double v : y.data()) CHECK(v == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("parameter count closed forms") {
  CHECK(LstmLayer::param_count(64, 128) == 4 * 128 * (64 + 128) + 8 * 128);
  CHECK(LstmLayer::param_count(8, 16) == 4 * 16 * (8 + 16) + 8 * 16);
  ParamRng rng(1);
  Linear fc(256, 64, rng);
  CHECK(fc.param_count() == 16448);
}

TEST_CASE("lstm size shrinks ~K^2 when both dims shrink by K") {
  // exactly K^2 on the weight matrices; biases pull the full ratio slightly
  // below K^2
  for (std::size_t k : {4u, 8u}) {
    const std::size_t hi = 64, ho = 128;
    const std::size_t weights_big = 4 * ho * (hi + ho);
    const std::size_t weights_small = 4 * (ho / k) * (hi / k + ho / k);
    CHECK(weights_big == k * k * weights_small);

    const double full_ratio = static_cast<double>(LstmLayer::param_count(hi, ho)) /
                              static_cast<double>(LstmLayer::param_count(hi / k, ho / k));
    CHECK(full_ratio <= static_cast<double>(k * k));
    CHECK(full_ratio > 0.85 * static_cast<double>(k * k));
  }
}

TEST_CASE("layer gradients pass finite differences") {
  testutil::Rng vrng(31);

  SUBCASE("linear") {
    ParamRng rng(8);
    Linear fc(4, 3, rng);
    Tensor x = testutil::random_tensor({2, 4}, vrng, true);
    auto loss = [&] { return sum(mul(fc.forward(x), fc.forward(x))); };
    CHECK(testutil::max_grad_rel_err({fc.weight, fc.bias, x}, loss) < 1e-4);
  }

  SUBCASE("layer norm") {
    LayerNorm ln(4);
    Tensor x = testutil::random_tensor({3, 4}, vrng, true);
    auto loss = [&] { return sum(mul(ln.forward(x), x)); };
    CHECK(testutil::max_grad_rel_err({ln.gain, ln.bias, x}, loss) < 1e-4);
  }

  SUBCASE("lstm") {
    ParamRng rng(9);
    LstmLayer layer(2, 3, rng);
    Tensor seq = testutil::random_tensor({1, 4, 2}, vrng, true);
    auto loss = [&] { return sum(mul(layer.forward(seq), layer.forward(seq))); };
    CHECK(testutil::max_grad_rel_err({layer.w_ih, layer.w_hh, layer.b_ih, layer.b_hh, seq},
                                     loss) < 1e-4);
  }

  SUBCASE("blstm") {
    ParamRng rng(10);
    Blstm blstm(2, 2, rng);
    Tensor seq = testutil::random_tensor({1, 3, 2}, vrng, true);
    auto loss = [&] { return sum(mul(blstm.forward(seq), blstm.forward(seq))); };
    CHECK(testutil::max_grad_rel_err(
              {blstm.fwd.w_ih, blstm.fwd.w_hh, blstm.bwd.w_ih, blstm.bwd.w_hh, seq}, loss) <
          1e-4);
  }
}

TEST_CASE("registry rejects duplicates and counts totals") {
  ParamRegistry reg;
  reg.add("a", Tensor::zeros({2, 3}, true));
  reg.add("b", Tensor::zeros({4}, true));
  CHECK(reg.total_params() == 10);
  CHECK_THROWS(reg.add("a", Tensor::zeros({1}, true)));
}
