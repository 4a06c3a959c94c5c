#include <cstdio>
#include <cstring>
#include <filesystem>

#include "doctest.h"
#include "gcsep/io.hpp"
#include "test_util.hpp"

using namespace gcsep;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("wav pcm16 round trip") {
  testutil::Rng rng(91);
  WavData wav;
  wav.sample_rate = 8000;
  for (int i = 0; i < 500; ++i) wav.samples.push_back(rng.uniform(-0.9, 0.9));

  const std::string path = temp_path("gcsep_roundtrip.wav");
  write_wav(path, wav);
  WavData back = read_wav(path);
  CHECK(back.sample_rate == 8000);
  REQUIRE(back.samples.size() == wav.samples.size());
  for (std::size_t i = 0; i < wav.samples.size(); ++i)
    CHECK(back.samples[i] == doctest::Approx(wav.samples[i]).epsilon(1e-3));
  std::remove(path.c_str());
}

TEST_CASE("wav values clamp instead of wrapping") {
  WavData wav;
  wav.sample_rate = 8000;
  wav.samples = {2.0, -2.0, 0.0};
  const std::string path = temp_path("gcsep_clamp.wav");
  write_wav(path, wav);
  WavData back = read_wav(path);
  CHECK(back.samples[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(back.samples[1] == doctest::Approx(-1.0).epsilon(1e-3));
  std::remove(path.c_str());
}

TEST_CASE("wav rejects what it cannot represent") {
  const std::string path = temp_path("gcsep_bad.wav");

  // not a RIFF stream
  write_text_file(path, "definitely not audio");
  CHECK_THROWS_WITH(read_wav(path), doctest::Contains("RIFF"));

  // stereo PCM16: patch the channel count in a valid header
  WavData mono;
  mono.sample_rate = 8000;
  mono.samples = {0.1, 0.2, 0.3, 0.4};
  write_wav(path, mono);
  std::string bytes = read_text_file(path);
  bytes[22] = 2;  // channels
  write_text_file(path, bytes);
  CHECK_THROWS_WITH(read_wav(path), doctest::Contains("mono"));

  // truncated data chunk
  write_wav(path, mono);
  bytes = read_text_file(path);
  write_text_file(path, bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS(read_wav(path));

  std::remove(path.c_str());
  CHECK_THROWS(read_wav(temp_path("gcsep_missing_file.wav")));
}

TEST_CASE("float32 wav is readable") {
  // hand-build a 3-sample float32 file
  std::string out;
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  auto u16 = [&](std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>(v >> 8));
  };
  out += "RIFF";
  u32(36 + 12);
  out += "WAVEfmt ";
  u32(16);
  u16(3);  // IEEE float
  u16(1);
  u32(16000);
  u32(16000 * 4);
  u16(4);
  u16(32);
  out += "data";
  u32(12);
  const float vals[3] = {0.25f, -0.5f, 1.0f};
  for (float f : vals) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    u32(bits);
  }
  const std::string path = temp_path("gcsep_f32.wav");
  write_text_file(path, out);
  WavData wav = read_wav(path);
  CHECK(wav.sample_rate == 16000);
  REQUIRE(wav.samples.size() == 3);
  CHECK(wav.samples[0] == doctest::Approx(0.25));
  CHECK(wav.samples[1] == doctest::Approx(-0.5));
  CHECK(wav.samples[2] == doctest::Approx(1.0));
  std::remove(path.c_str());
}

TEST_CASE("checkpoint round trip is bit exact") {
  ModelConfig cfg;
  cfg.group_count = 2;
  cfg.group_size = 4;
  cfg.encoder_filters = 8;
  cfg.lstm_input = 4;
  cfg.lstm_hidden = 8;
  cfg.depth = 1;
  cfg.window_samples = 4;
  cfg.stride_samples = 2;
  SeparatorModel model(cfg, 33);

  const std::string path = temp_path("gcsep_ckpt.txt");
  save_checkpoint(path, model);
  SeparatorModel back = load_model(path);
  CHECK(back.config() == cfg);
  REQUIRE(back.registry().size() == model.registry().size());
  for (const auto& [name, param] : model.registry().entries()) {
    CHECK(back.registry().get(name).data() == param.data());
  }

  // corrupting a tensor name must be caught
  std::string text = read_text_file(path);
  const auto pos = text.find("mask.weight");
  text.replace(pos, 11, "mask.wright");
  write_text_file(path, text);
  CHECK_THROWS(load_model(path));
  std::remove(path.c_str());
}

TEST_CASE("run config parse/serialize identity and errors") {
  RunConfig cfg;
  cfg.model.group_count = 4;
  cfg.model.group_size = 8;
  cfg.model.encoder_filters = 32;
  cfg.model.lstm_input = 8;
  cfg.model.lstm_hidden = 16;
  cfg.model.depth = 2;
  cfg.train.seed = 99;
  cfg.train.max_epochs = 17;
  cfg.duration_s = 0.5;

  const std::string text = serialize_run_config(cfg);
  RunConfig back = parse_run_config(text);
  CHECK(serialize_run_config(back) == text);
  CHECK(back.model == cfg.model);
  CHECK(back.train.seed == 99);

  CHECK_THROWS_WITH(parse_run_config("group_count = 4\nwibble = 3\n"),
                    doctest::Contains("unknown key"));
  CHECK_THROWS(parse_run_config("group_count == 4\n"));
  CHECK_THROWS(parse_run_config("depth = two\n"));

  // comments and blank lines are fine
  RunConfig commented = parse_run_config("# header\n\nseed = 5 # trailing\n");
  CHECK(commented.train.seed == 5);
}
