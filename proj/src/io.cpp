#include "gcsep/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace gcsep {

namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

WavData read_wav(const std::string& path) {
  const std::string raw = read_text_file(path);
  const auto* p = reinterpret_cast<const unsigned char*>(raw.data());
  const std::size_t n = raw.size();
  auto fail = [&](const std::string& why) -> WavData {
    throw std::runtime_error("bad WAV file " + path + ": " + why);
  };
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    fail("not a RIFF/WAVE stream");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t data_off = 0, data_len = 0;

  std::size_t off = 12;
  while (off + 8 <= n) {
    const std::uint32_t chunk_len = read_u32(p + off + 4);
    if (off + 8 + chunk_len > n) fail("truncated chunk");
    if (std::memcmp(p + off, "fmt ", 4) == 0) {
      if (chunk_len < 16) fail("fmt chunk too short");
      format = read_u16(p + off + 8);
      channels = read_u16(p + off + 10);
      rate = read_u32(p + off + 12);
      bits = read_u16(p + off + 22);
      have_fmt = true;
    } else if (std::memcmp(p + off, "data", 4) == 0) {
      data_off = off + 8;
      data_len = chunk_len;
    }
    off += 8 + chunk_len + (chunk_len & 1);
  }
  if (!have_fmt) fail("missing fmt chunk");
  if (data_off == 0) fail("missing data chunk");
  if (channels != 1) fail("only mono is supported");
  if (rate == 0) fail("zero sample rate");

  WavData wav;
  wav.sample_rate = rate;
  if (format == 1 && bits == 16) {
    const std::size_t count = data_len / 2;
    wav.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::int16_t s = static_cast<std::int16_t>(read_u16(p + data_off + 2 * i));
      wav.samples[i] = static_cast<double>(s) / 32768.0;
    }
  } else if (format == 3 && bits == 32) {
    const std::size_t count = data_len / 4;
    wav.samples.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
      const std::uint32_t u = read_u32(p + data_off + 4 * i);
      float f;
      std::memcpy(&f, &u, 4);
      wav.samples[i] = static_cast<double>(f);
    }
  } else {
    fail("unsupported encoding (want PCM16 or float32)");
  }
  return wav;
}

void write_wav(const std::string& path, const WavData& wav) {
  if (wav.sample_rate == 0) throw std::invalid_argument("write_wav: zero sample rate");
  std::string out;
  const std::uint32_t data_len = static_cast<std::uint32_t>(wav.samples.size() * 2);
  out.reserve(44 + data_len);
  out += "RIFF";
  put_u32(out, 36 + data_len);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wav.sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, data_len);
  for (double v : wav.samples) {
    const double clamped = std::clamp(v, -1.0, 1.0);
    const double scaled = std::round(clamped * 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  write_text_file(path, out);
}

namespace {

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_checkpoint(const std::string& path, const SeparatorModel& model) {
  const ModelConfig& cfg = model.config();
  std::ostringstream out;
  out << "gcsep-checkpoint v1\n";
  out << "config " << cfg.group_count << ' ' << cfg.group_size << ' ' << cfg.encoder_filters << ' '
      << cfg.lstm_input << ' ' << cfg.lstm_hidden << ' ' << cfg.depth << ' ' << cfg.window_samples
      << ' ' << cfg.stride_samples << ' ' << cfg.num_speakers << ' ' << cfg.sample_rate << ' '
      << cfg.block_hop << '\n';
  out << "tensors " << model.registry().size() << '\n';
  for (const auto& [name, param] : model.registry().entries()) {
    out << name << ' ' << param.ndim();
    for (std::size_t d : param.shape()) out << ' ' << d;
    out << '\n';
    const auto& data = param.data();
    for (std::size_t i = 0; i < data.size(); ++i)
      out << format_g17(data[i]) << (i + 1 == data.size() ? '\n' : ' ');
    if (data.empty()) out << '\n';
  }
  write_text_file(path, out.str());
}

ModelConfig load_checkpoint(const std::string& path,
                            std::map<std::string, std::vector<double>>& params_out) {
  std::istringstream in(read_text_file(path));
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("bad checkpoint " + path + ": " + why);
  };
  std::string line;
  if (!std::getline(in, line) || line != "gcsep-checkpoint v1") fail("unknown header");

  std::string word;
  ModelConfig cfg;
  in >> word;
  if (word != "config") fail("missing config line");
  in >> cfg.group_count >> cfg.group_size >> cfg.encoder_filters >> cfg.lstm_input >>
      cfg.lstm_hidden >> cfg.depth >> cfg.window_samples >> cfg.stride_samples >>
      cfg.num_speakers >> cfg.sample_rate >> cfg.block_hop;
  if (!in) fail("malformed config line");
  cfg.validate();

  std::size_t count = 0;
  in >> word >> count;
  if (!in || word != "tensors") fail("missing tensor count");

  params_out.clear();
  for (std::size_t t = 0; t < count; ++t) {
    std::string name;
    std::size_t ndim = 0;
    in >> name >> ndim;
    if (!in) fail("truncated tensor header");
    std::size_t numel = 1;
    for (std::size_t d = 0; d < ndim; ++d) {
      std::size_t dim = 0;
      in >> dim;
      if (!in || dim == 0) fail("bad shape for tensor '" + name + "'");
      numel *= dim;
    }
    std::vector<double> values(numel);
    for (double& v : values) {
      in >> v;
      if (!in) fail("truncated values for tensor '" + name + "'");
    }
    if (!params_out.emplace(name, std::move(values)).second)
      fail("duplicate tensor '" + name + "'");
  }
  return cfg;
}

SeparatorModel load_model(const std::string& path) {
  std::map<std::string, std::vector<double>> params;
  const ModelConfig cfg = load_checkpoint(path, params);
  SeparatorModel model(cfg, 0);
  for (const auto& entry : model.registry().entries()) {
    Tensor param = entry.second;
    auto it = params.find(entry.first);
    if (it == params.end())
      throw std::runtime_error("checkpoint " + path + " is missing tensor '" + entry.first + "'");
    if (it->second.size() != param.numel())
      throw std::runtime_error("checkpoint " + path + " has wrong size for tensor '" +
                               entry.first + "'");
    param.mutable_data() = it->second;
    params.erase(it);
  }
  if (!params.empty())
    throw std::runtime_error("checkpoint " + path + " has unexpected tensor '" +
                             params.begin()->first + "'");
  return model;
}

namespace {

template <typename T>
void parse_uint_field(const std::string& key, const std::string& value, T& out) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(value, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("run config: invalid integer for '" + key + "': " + value);
  }
  if (pos != value.size())
    throw std::runtime_error("run config: invalid integer for '" + key + "': " + value);
  out = static_cast<T>(v);
}

void parse_double_field(const std::string& key, const std::string& value, double& out) {
  std::size_t pos = 0;
  try {
    out = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("run config: invalid number for '" + key + "': " + value);
  }
  if (pos != value.size())
    throw std::runtime_error("run config: invalid number for '" + key + "': " + value);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("run config line " + std::to_string(line_no) +
                               ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::runtime_error("run config line " + std::to_string(line_no) +
                               ": expected key = value");

    if (key == "group_count") parse_uint_field(key, value, cfg.model.group_count);
    else if (key == "group_size") parse_uint_field(key, value, cfg.model.group_size);
    else if (key == "encoder_filters") parse_uint_field(key, value, cfg.model.encoder_filters);
    else if (key == "lstm_input") parse_uint_field(key, value, cfg.model.lstm_input);
    else if (key == "lstm_hidden") parse_uint_field(key, value, cfg.model.lstm_hidden);
    else if (key == "depth") parse_uint_field(key, value, cfg.model.depth);
    else if (key == "window_samples") parse_uint_field(key, value, cfg.model.window_samples);
    else if (key == "stride_samples") parse_uint_field(key, value, cfg.model.stride_samples);
    else if (key == "num_speakers") parse_uint_field(key, value, cfg.model.num_speakers);
    else if (key == "sample_rate") parse_uint_field(key, value, cfg.model.sample_rate);
    else if (key == "block_hop") parse_uint_field(key, value, cfg.model.block_hop);
    else if (key == "initial_lr") parse_double_field(key, value, cfg.train.initial_lr);
    else if (key == "lr_decay") parse_double_field(key, value, cfg.train.lr_decay);
    else if (key == "max_epochs") parse_uint_field(key, value, cfg.train.max_epochs);
    else if (key == "clip_norm") parse_double_field(key, value, cfg.train.clip_norm);
    else if (key == "patience") parse_uint_field(key, value, cfg.train.patience);
    else if (key == "batch_size") parse_uint_field(key, value, cfg.train.batch_size);
    else if (key == "seed") parse_uint_field(key, value, cfg.train.seed);
    else if (key == "duration_s") parse_double_field(key, value, cfg.duration_s);
    else if (key == "train_items") parse_uint_field(key, value, cfg.train_items);
    else if (key == "valid_items") parse_uint_field(key, value, cfg.valid_items);
    else throw std::runtime_error("run config line " + std::to_string(line_no) +
                                  ": unknown key '" + key + "'");
  }
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  try {
    return parse_run_config(read_text_file(path));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string serialize_run_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "group_count = " << cfg.model.group_count << '\n';
  out << "group_size = " << cfg.model.group_size << '\n';
  out << "encoder_filters = " << cfg.model.encoder_filters << '\n';
  out << "lstm_input = " << cfg.model.lstm_input << '\n';
  out << "lstm_hidden = " << cfg.model.lstm_hidden << '\n';
  out << "depth = " << cfg.model.depth << '\n';
  out << "window_samples = " << cfg.model.window_samples << '\n';
  out << "stride_samples = " << cfg.model.stride_samples << '\n';
  out << "num_speakers = " << cfg.model.num_speakers << '\n';
  out << "sample_rate = " << cfg.model.sample_rate << '\n';
  out << "block_hop = " << cfg.model.block_hop << '\n';
  out << "initial_lr = " << format_g17(cfg.train.initial_lr) << '\n';
  out << "lr_decay = " << format_g17(cfg.train.lr_decay) << '\n';
  out << "max_epochs = " << cfg.train.max_epochs << '\n';
  out << "clip_norm = " << format_g17(cfg.train.clip_norm) << '\n';
  out << "patience = " << cfg.train.patience << '\n';
  out << "batch_size = " << cfg.train.batch_size << '\n';
  out << "seed = " << cfg.train.seed << '\n';
  out << "duration_s = " << format_g17(cfg.duration_s) << '\n';
  out << "train_items = " << cfg.train_items << '\n';
  out << "valid_items = " << cfg.valid_items << '\n';
  return out.str();
}

}  // namespace gcsep
