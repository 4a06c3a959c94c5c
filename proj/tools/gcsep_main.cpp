#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gcsep/io.hpp"
#include "gcsep/metrics.hpp"
#include "gcsep/profiler.hpp"
#include "gcsep/separator.hpp"
#include "gcsep/trainer.hpp"

namespace {

int cmd_profile(const std::string& config_path, bool table2, gcsep::ModelConfig flags_cfg,
                bool have_flags, double seconds, const std::string& csv_path) {
  std::vector<gcsep::ModelConfig> configs;
  if (table2) {
    configs = gcsep::table2_configs();
  } else if (!config_path.empty()) {
    try {
      configs.push_back(gcsep::load_run_config(config_path).model);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  } else if (have_flags) {
    flags_cfg.validate();
    configs.push_back(flags_cfg);
  } else {
    std::fprintf(stderr, "profile: pass --table2, --config, or explicit -K/-M/-N flags\n");
    return 1;
  }
  const auto reports = gcsep::sweep(configs, seconds);
  std::fputs(gcsep::sweep_to_text(reports).c_str(), stdout);
  if (!csv_path.empty()) gcsep::write_text_file(csv_path, gcsep::sweep_to_csv(reports));
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  gcsep::RunConfig cfg;
  try {
    cfg = gcsep::load_run_config(config_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::filesystem::create_directories(out_dir);

  std::vector<gcsep::ToyMixture> train_set, valid_set;
  for (std::size_t i = 0; i < cfg.train_items; ++i)
    train_set.push_back(gcsep::generate_toy_mixture(cfg.train.seed * 1000 + i, cfg.duration_s,
                                                    cfg.model.sample_rate));
  for (std::size_t i = 0; i < cfg.valid_items; ++i)
    valid_set.push_back(gcsep::generate_toy_mixture(cfg.train.seed * 1000 + 500 + i,
                                                    cfg.duration_s, cfg.model.sample_rate));

  gcsep::SeparatorModel model(cfg.model, cfg.train.seed);
  const double baseline = gcsep::mixture_si_sdr(train_set);
  const gcsep::TrainResult result = gcsep::train(model, train_set, valid_set, cfg.train);

  gcsep::write_text_file(out_dir + "/history.csv", gcsep::history_to_csv(result.history));
  gcsep::save_checkpoint(out_dir + "/checkpoint.txt", model);

  if (result.diverged) {
    std::fprintf(stderr, "training diverged (non-finite loss); last good checkpoint saved\n");
    return 2;
  }
  const double final_train = gcsep::evaluate_si_sdr(model, train_set);
  std::printf("epochs run: %zu\n", result.history.size());
  std::printf("best validation SI-SDR: %.3f dB (epoch %zu)\n", result.best_valid_sisdr,
              result.best_epoch);
  std::printf("train-set SI-SDR: %.3f dB (mixture baseline %.3f dB, gain %.3f dB)\n", final_train,
              baseline, final_train - baseline);
  return 0;
}

int cmd_separate(const std::string& ckpt_path, const std::string& wav_path,
                 const std::string& out_prefix) {
  const gcsep::SeparatorModel model = gcsep::load_model(ckpt_path);
  const gcsep::WavData wav = gcsep::read_wav(wav_path);
  if (wav.sample_rate != model.config().sample_rate) {
    std::fprintf(stderr, "sample-rate mismatch: %s has %zu Hz, checkpoint expects %zu Hz\n",
                 wav_path.c_str(), wav.sample_rate, model.config().sample_rate);
    return 1;
  }
  gcsep::Tensor est = model.separate(
      gcsep::Tensor::from_data({1, wav.samples.size()}, wav.samples));
  const std::size_t len = wav.samples.size();
  for (std::size_t s = 0; s < model.config().num_speakers; ++s) {
    gcsep::WavData out;
    out.sample_rate = wav.sample_rate;
    out.samples.assign(est.data().begin() + s * len, est.data().begin() + (s + 1) * len);
    const std::string path = out_prefix + std::to_string(s + 1) + ".wav";
    gcsep::write_wav(path, out);
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& mix_path,
                 const std::string& est1_path, const std::string& est2_path,
                 const std::string& ref1_path, const std::string& ref2_path) {
  const gcsep::WavData ref1 = gcsep::read_wav(ref1_path);
  const gcsep::WavData ref2 = gcsep::read_wav(ref2_path);
  if (ref1.sample_rate != ref2.sample_rate || ref1.samples.size() != ref2.samples.size()) {
    std::fprintf(stderr, "reference WAVs disagree in rate or length\n");
    return 1;
  }

  std::vector<double> est1, est2;
  if (!ckpt_path.empty()) {
    const gcsep::SeparatorModel model = gcsep::load_model(ckpt_path);
    const gcsep::WavData mix = gcsep::read_wav(mix_path);
    if (mix.sample_rate != model.config().sample_rate) {
      std::fprintf(stderr, "sample-rate mismatch: %s has %zu Hz, checkpoint expects %zu Hz\n",
                   mix_path.c_str(), mix.sample_rate, model.config().sample_rate);
      return 1;
    }
    if (mix.samples.size() != ref1.samples.size()) {
      std::fprintf(stderr, "mixture and reference lengths differ\n");
      return 1;
    }
    gcsep::Tensor est = model.separate(
        gcsep::Tensor::from_data({1, mix.samples.size()}, mix.samples));
    const std::size_t len = mix.samples.size();
    est1.assign(est.data().begin(), est.data().begin() + len);
    est2.assign(est.data().begin() + len, est.data().begin() + 2 * len);
  } else {
    const gcsep::WavData e1 = gcsep::read_wav(est1_path);
    const gcsep::WavData e2 = gcsep::read_wav(est2_path);
    if (e1.samples.size() != ref1.samples.size() || e2.samples.size() != ref1.samples.size()) {
      std::fprintf(stderr, "estimate and reference lengths differ\n");
      return 1;
    }
    est1 = e1.samples;
    est2 = e2.samples;
  }

  const gcsep::PitSiSdr r = gcsep::pit_si_sdr(est1, est2, ref1.samples, ref2.samples);
  std::printf("permutation: %s\n", r.swapped ? "swapped" : "identity");
  std::printf("source 1 SI-SDR: %.3f dB\n", r.per_source[0]);
  std::printf("source 2 SI-SDR: %.3f dB\n", r.per_source[1]);
  std::printf("mean SI-SDR: %.3f dB\n", r.mean_db);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Group-communication dual-path speech separation toolkit"};
  app.require_subcommand(1);

  // profile
  auto* profile = app.add_subcommand("profile", "Report parameter and MAC counts");
  std::string profile_config, profile_csv;
  bool table2 = false;
  double seconds = 4.0;
  gcsep::ModelConfig fcfg;
  profile->add_flag("--table2", table2, "Use the 12 built-in reference configurations");
  profile->add_option("--config", profile_config, "Run config file");
  profile->add_option("--seconds", seconds, "Input duration for MAC counting");
  profile->add_option("--csv", profile_csv, "Also write the sweep as CSV");
  auto* optK = profile->add_option("-K,--groups", fcfg.group_count, "Group count");
  profile->add_option("-M,--group-size", fcfg.group_size, "Per-group feature width");
  profile->add_option("-N,--encoder-filters", fcfg.encoder_filters, "Encoder filter count");
  profile->add_option("--hi", fcfg.lstm_input, "Block input width (baseline bottleneck)");
  profile->add_option("--ho", fcfg.lstm_hidden, "LSTM hidden width per direction");
  profile->add_option("-L,--depth", fcfg.depth, "Number of dual-path blocks");

  // train
  auto* train = app.add_subcommand("train", "Train on generated toy mixtures");
  std::string train_config, out_dir = ".";
  train->add_option("--config", train_config, "Run config file")->required();
  train->add_option("--out-dir", out_dir, "Directory for checkpoint.txt and history.csv");

  // separate
  auto* separate = app.add_subcommand("separate", "Split a mixture WAV into sources");
  std::string sep_ckpt, sep_wav, out_prefix = "est";
  separate->add_option("--checkpoint", sep_ckpt, "Model checkpoint")->required();
  separate->add_option("input", sep_wav, "Mixture WAV file")->required();
  separate->add_option("--out-prefix", out_prefix, "Output prefix (writes <prefix>1.wav ...)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Report SI-SDR against references");
  std::string eval_ckpt, eval_mix, eval_est1, eval_est2, eval_ref1, eval_ref2;
  evaluate->add_option("--checkpoint", eval_ckpt, "Separate the mixture with this checkpoint");
  evaluate->add_option("--mixture", eval_mix, "Mixture WAV (with --checkpoint)");
  evaluate->add_option("--est1", eval_est1, "First estimate WAV (without --checkpoint)");
  evaluate->add_option("--est2", eval_est2, "Second estimate WAV (without --checkpoint)");
  evaluate->add_option("ref1", eval_ref1, "First reference WAV")->required();
  evaluate->add_option("ref2", eval_ref2, "Second reference WAV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (profile->parsed())
      return cmd_profile(profile_config, table2, fcfg, optK->count() > 0, seconds, profile_csv);
    if (train->parsed()) return cmd_train(train_config, out_dir);
    if (separate->parsed()) return cmd_separate(sep_ckpt, sep_wav, out_prefix);
    if (evaluate->parsed()) {
      if (eval_ckpt.empty() == eval_est1.empty()) {
        std::fprintf(stderr, "evaluate: pass either --checkpoint with --mixture, or --est1/--est2\n");
        return 1;
      }
      if (!eval_ckpt.empty() && eval_mix.empty()) {
        std::fprintf(stderr, "evaluate: --checkpoint requires --mixture\n");
        return 1;
      }
      if (eval_ckpt.empty() && eval_est2.empty()) {
        std::fprintf(stderr, "evaluate: --est1 requires --est2\n");
        return 1;
      }
      return cmd_evaluate(eval_ckpt, eval_mix, eval_est1, eval_est2, eval_ref1, eval_ref2);
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 1;
}
