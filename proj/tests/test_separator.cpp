#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "gcsep/profiler.hpp"
#include "gcsep/separator.hpp"
#include "test_util.hpp"

using namespace gcsep;

namespace {

ModelConfig micro_config() {
  ModelConfig cfg;
  cfg.group_count = 2;
  cfg.group_size = 4;
  cfg.encoder_filters = 8;
  cfg.lstm_input = 4;
  cfg.lstm_hidden = 8;
  cfg.depth = 1;
  cfg.window_samples = 4;
  cfg.stride_samples = 2;
  return cfg;
}

}  // namespace

TEST_CASE("config validation names the offending field") {
  ModelConfig cfg = micro_config();
  cfg.group_size = 3;  // K*M != N
  CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("group"));
  cfg = micro_config();
  cfg.lstm_input = 7;
  CHECK_THROWS_WITH(cfg.validate(), doctest::Contains("lstm_input"));
}

TEST_CASE("encoder basics") {
  SeparatorModel model(micro_config(), 1);

  // zero waveform -> zero pre-norm features via the conv itself
  Tensor wave = Tensor::zeros({1, 64});
  Tensor enc = conv1d(wave, model.encoder_kernels, 2);
  for (double v : enc.data()) CHECK(v == 0.0);

  // 16 kHz length formula
  ModelConfig full = micro_config();
  full.window_samples = 32;
  full.stride_samples = 16;
  CHECK(full.frames_for(64000) == 3999);

  // selector kernel picks strided samples
  ModelConfig tiny = micro_config();
  SeparatorModel m2(tiny, 2);
  Tensor k = m2.encoder_kernels;
  std::fill(k.mutable_data().begin(), k.mutable_data().end(), 0.0);
  for (std::size_t c = 0; c < tiny.encoder_filters; ++c) k.mutable_data()[c * 4] = (c == 0);
  Tensor x = Tensor::from_data({1, 8}, {1, 2, 3, 4, 5, 6, 7, 8});
  Tensor sel = conv1d(x, m2.encoder_kernels, 2);
  CHECK(slice(sel, 0, 0, 1).data() == std::vector<double>{1, 3, 5});
}

TEST_CASE("masks are nonnegative and shaped [n_spk x N x L]") {
  SeparatorModel model(micro_config(), 3);
  testutil::Rng vrng(41);
  Tensor features = testutil::random_tensor({8, 9}, vrng, false);  // [N x frames], merged
  auto masks = model.estimate_masks(features);
  REQUIRE(masks.size() == 2);
  for (const Tensor& m : masks) {
    CHECK(m.shape() == Shape{8, 9});
    for (double v : m.data()) CHECK(v >= 0.0);
  }
}

TEST_CASE("zero mask weights silence every output") {
  SeparatorModel model(micro_config(), 4);
  Tensor w = model.mask_layer.weight;
  Tensor b = model.mask_layer.bias;
  std::fill(w.mutable_data().begin(), w.mutable_data().end(), 0.0);
  std::fill(b.mutable_data().begin(), b.mutable_data().end(), 0.0);
  testutil::Rng vrng(42);
  Tensor wave = testutil::random_tensor({1, 100}, vrng, false);
  Tensor out = model.separate(wave);
  REQUIRE(out.shape() == Shape{2, 100});
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("output shape holds for random lengths") {
  SeparatorModel model(micro_config(), 5);
  testutil::Rng vrng(43);
  for (int it = 0; it < 25; ++it) {
    const std::size_t len = 4 + vrng.index(600);
    Tensor wave = testutil::random_tensor({1, len}, vrng, false);
    Tensor out = model.separate(wave);
    CHECK(out.shape() == Shape{2, len});
  }
}

TEST_CASE("grouped and ungrouped variants both stay finite") {
  ModelConfig grouped = micro_config();
  ModelConfig baseline = micro_config();
  baseline.group_count = 1;
  baseline.group_size = baseline.encoder_filters;
  SeparatorModel a(grouped, 6);
  SeparatorModel b(baseline, 6);
  testutil::Rng vrng(44);
  for (int it = 0; it < 100; ++it) {
    Tensor wave = testutil::random_tensor({1, 50 + vrng.index(100)}, vrng, false);
    Tensor oa = a.separate(wave);
    Tensor ob = b.separate(slice(wave, 0, 0, 1));
    for (double v : oa.data()) CHECK(std::isfinite(v));
    for (double v : ob.data()) CHECK(std::isfinite(v));
  }
}

TEST_CASE("parameter sharing shows up as one registry entry per tensor") {
  ModelConfig cfg = micro_config();
  cfg.depth = 2;
  SeparatorModel model(cfg, 7);
  // per block: one groupcomm unit + intra + inter units, regardless of K
  CHECK(model.registry().contains("block0.groupcomm.blstm.fwd.w_ih"));
  CHECK(model.registry().contains("block1.inter.proj.weight"));
  CHECK_FALSE(model.registry().contains("block0.group1.groupcomm.blstm.fwd.w_ih"));
  CHECK(model.registry().total_params() == count_model_params(cfg));
}

TEST_CASE("analytical parameter count equals the built registry") {
  std::vector<ModelConfig> cases = {micro_config()};
  ModelConfig b = micro_config();
  b.group_count = 1;
  b.group_size = b.encoder_filters;
  b.depth = 3;
  cases.push_back(b);
  ModelConfig c = micro_config();
  c.group_count = 4;
  c.group_size = 2;
  c.lstm_input = 2;
  c.lstm_hidden = 4;
  cases.push_back(c);
  for (const auto& cfg : cases) {
    SeparatorModel model(cfg, 8);
    CHECK(model.registry().total_params() == count_model_params(cfg));
  }
}

TEST_CASE("end-to-end micro-model gradient check") {
  SeparatorModel model(micro_config(), 9);
  testutil::Rng vrng(45);
  Tensor wave = testutil::random_tensor({1, 64}, vrng, true);
  auto loss = [&] {
    Tensor out = model.separate(wave);
    return sum(mul(out, out));
  };
  std::vector<Tensor> params = {wave};
  for (const char* name :
       {"encoder.weight", "encoder.norm.gain", "block0.groupcomm.blstm.fwd.w_ih",
        "block0.intra.blstm.bwd.w_hh", "block0.inter.proj.weight", "mask.weight",
        "decoder.weight"}) {
    params.push_back(model.registry().get(name));
  }
  CHECK(testutil::max_grad_rel_err(params, loss, 1e-5, 24) < 1e-3);
}
