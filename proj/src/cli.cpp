#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "ndps/cli_io.hpp"
#include "ndps/filterbank.hpp"
#include "ndps/metrics.hpp"

namespace ndps {

namespace {

int cmd_features(const std::string& manifest_path) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  const FeaturePrepResult result = prepare_features(manifest, std::cout);
  if (result.failed > 0)
    std::cerr << result.failed << " utterance(s) failed\n";
  return result.processed == 0 && result.failed > 0 ? 2 : 0;
}

int cmd_train(const std::string& manifest_path, const std::string& out_dir,
              const std::string& config_path,
              const std::vector<std::string>& overrides) {
  std::map<std::string, std::string> kv;
  if (!config_path.empty()) kv = read_config(config_path);
  apply_overrides(kv, overrides);
  const ToolkitConfig tc = parse_toolkit_config(kv);

  const DatasetManifest manifest =
      load_manifest(manifest_path, /*require_features=*/true);
  const std::vector<Utterance> data = load_utterances(manifest);

  std::filesystem::create_directories(out_dir);
  std::ofstream log(out_dir + "/train_log.tsv", std::ios::trunc);
  if (!log) throw DataError("cannot open training log in '" + out_dir + "'");
  write_log_header(log);

  TrainerState state = make_trainer(tc.gen, tc.disc, tc.train);
  for (int i = 0; i < tc.train.total_steps; ++i) {
    const std::int64_t step = state.step;
    const double lr = learning_rate(tc.train, step);
    const LossReport report = train_step(state, sample_batch(state, data));
    write_log_row(log, step, lr, report);
  }
  const std::string ckpt = out_dir + "/checkpoint.ndps";
  save_checkpoint(ckpt, snapshot(state));
  std::cout << "trained " << tc.train.total_steps << " step(s), checkpoint "
            << ckpt << "\n";
  return 0;
}

int cmd_synth(const std::string& checkpoint_path,
              const std::string& feature_path, const std::string& out_path,
              std::uint64_t seed, double mu, const std::vector<int>& bands) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  const MelSpectrogram mel = read_feature_file(feature_path);
  const NoiseControl ctrl{mu, bands};
  const std::vector<double> wave =
      synthesize(mel, seed, ctrl, ck.params, ck.gen_cfg);
  write_wav(out_path, wave);
  std::cout << "wrote " << wave.size() << " samples to " << out_path << "\n";
  return 0;
}

int cmd_eval(const std::string& manifest_path, const std::string& pred_dir,
             const std::string& out_path) {
  const DatasetManifest manifest = load_manifest(manifest_path);
  if (manifest.entries.empty()) throw DataError("manifest has no utterances");
  std::vector<std::string> ids;
  std::vector<std::vector<double>> ref, pred;
  for (const ManifestEntry& e : manifest.entries) {
    ids.push_back(e.id);
    ref.push_back(read_wav(e.audio_path).samples);
    pred.push_back(read_wav(pred_dir + "/" + e.id + ".wav").samples);
  }
  const MetricReport report = evaluate_corpus(ids, ref, pred);
  std::ofstream os(out_path, std::ios::trunc);
  if (!os) throw DataError("cannot open report '" + out_path + "'");
  write_metric_report(os, report);
  write_metric_report(std::cout, report);
  return 0;
}

int cmd_edit_noise(const std::string& checkpoint_path,
                   const std::string& feature_path,
                   const std::string& out_dir, std::uint64_t seed,
                   const std::string& ref_path) {
  Checkpoint ck = load_checkpoint(checkpoint_path);
  const MelSpectrogram mel = read_feature_file(feature_path);
  std::filesystem::create_directories(out_dir);

  const std::vector<double> grid = {-0.4, -0.2, 0.0, 0.2, 0.4};
  std::vector<std::vector<double>> waves;
  std::vector<std::string> names;
  for (double mu : grid) {
    char tag[16];
    std::snprintf(tag, sizeof(tag), "%.1f", mu);
    const std::string path = out_dir + "/mu_" + tag + ".wav";
    waves.push_back(synthesize(mel, seed, {mu, {}}, ck.params, ck.gen_cfg));
    write_wav(path, waves.back());
    names.emplace_back(tag);
  }

  // SNR against the natural reference when given, otherwise against the
  // mu = 0 synthesis.
  const std::vector<double> reference =
      ref_path.empty() ? waves[2] : read_wav(ref_path).samples;
  std::ofstream os(out_dir + "/snr_table.tsv", std::ios::trunc);
  if (!os) throw DataError("cannot open SNR table in '" + out_dir + "'");
  os << "mu\tsnr_db\n";
  std::cout << "mu\tsnr_db\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double value = snr(reference, waves[i]);
    os << names[i] << '\t' << value << '\n';
    std::cout << names[i] << '\t' << value << '\n';
  }
  return 0;
}

int cmd_design_fb(int bands, const std::string& out_dir) {
  const FilterBank bank = make_filter_bank(bands);
  std::filesystem::create_directories(out_dir);

  std::ofstream taps(out_dir + "/taps.tsv", std::ios::trunc);
  if (!taps) throw DataError("cannot open taps file in '" + out_dir + "'");
  taps.precision(17);
  taps << "prototype";
  for (double v : bank.prototype) taps << '\t' << v;
  taps << '\n';
  for (int k = 0; k < bank.m; ++k) {
    taps << "h" << k;
    for (double v : bank.analysis[static_cast<std::size_t>(k)])
      taps << '\t' << v;
    taps << '\n';
  }

  constexpr int kPoints = 2048;
  std::vector<std::vector<double>> responses;
  responses.push_back(magnitude_response(bank.prototype, kPoints));
  for (int k = 0; k < bank.m; ++k)
    responses.push_back(magnitude_response(
        bank.analysis[static_cast<std::size_t>(k)], kPoints));

  std::ofstream resp(out_dir + "/response.tsv", std::ios::trunc);
  if (!resp) throw DataError("cannot open response file in '" + out_dir +
                             "'");
  resp << "freq\tprototype";
  for (int k = 0; k < bank.m; ++k) resp << "\th" << k;
  resp << '\n';
  resp.precision(10);
  for (int j = 0; j < kPoints; ++j) {
    resp << static_cast<double>(j) / kPoints;
    for (const auto& r : responses)
      resp << '\t'
           << 20.0 * std::log10(r[static_cast<std::size_t>(j)] + 1e-12);
    resp << '\n';
  }
  std::cout << "wrote " << bank.m << "-band taps and responses to "
            << out_dir << "\n";
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"NeuralDPS vocoder toolkit"};
  app.require_subcommand(1);

  std::string manifest_path, out_path, config_path, checkpoint_path;
  std::string feature_path, pred_dir, ref_path;
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  double mu = 0.0;
  std::vector<int> bands;
  int fb_bands = 4;

  CLI::App* features =
      app.add_subcommand("features", "Extract mel features for a manifest");
  features->add_option("--manifest", manifest_path, "Dataset manifest")
      ->required();

  CLI::App* train = app.add_subcommand("train", "Train a model");
  train->add_option("--manifest", manifest_path, "Dataset manifest")
      ->required();
  train->add_option("--out", out_path, "Output directory")->required();
  train->add_option("--config", config_path, "key=value config file");
  train->add_option("--set", overrides, "Config override key=value");

  CLI::App* synth =
      app.add_subcommand("synth", "Synthesize a waveform from features");
  synth->add_option("--checkpoint", checkpoint_path, "Model checkpoint")
      ->required();
  synth->add_option("--features", feature_path, "Feature file")->required();
  synth->add_option("--out", out_path, "Output WAV path")->required();
  synth->add_option("--seed", seed, "Noise seed");
  synth->add_option("--mu", mu, "Stochastic mask offset in [-1, 1]");
  synth->add_option("--bands", bands, "Bands the offset applies to")
      ->delimiter(',');

  CLI::App* eval =
      app.add_subcommand("eval", "Score synthesized audio against references");
  eval->add_option("--manifest", manifest_path, "Reference manifest")
      ->required();
  eval->add_option("--pred-dir", pred_dir, "Directory of <id>.wav outputs")
      ->required();
  eval->add_option("--out", out_path, "Report path")->required();

  CLI::App* edit_noise = app.add_subcommand(
      "edit-noise", "Sweep the noise offset over a fixed grid");
  edit_noise
      ->add_option("--checkpoint", checkpoint_path, "Model checkpoint")
      ->required();
  edit_noise->add_option("--features", feature_path, "Feature file")
      ->required();
  edit_noise->add_option("--out", out_path, "Output directory")->required();
  edit_noise->add_option("--seed", seed, "Noise seed");
  edit_noise->add_option("--ref", ref_path,
                         "Natural reference WAV for the SNR table");

  CLI::App* design_fb =
      app.add_subcommand("design-fb", "Emit filter bank taps and responses");
  design_fb->add_option("--bands", fb_bands, "Number of bands");
  design_fb->add_option("--out", out_path, "Output directory")->required();

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // help is success, any parse failure usage
  }

  try {
    if (features->parsed()) return cmd_features(manifest_path);
    if (train->parsed())
      return cmd_train(manifest_path, out_path, config_path, overrides);
    if (synth->parsed())
      return cmd_synth(checkpoint_path, feature_path, out_path, seed, mu,
                       bands);
    if (eval->parsed()) return cmd_eval(manifest_path, pred_dir, out_path);
    if (edit_noise->parsed())
      return cmd_edit_noise(checkpoint_path, feature_path, out_path, seed,
                            ref_path);
    if (design_fb->parsed()) return cmd_design_fb(fb_bands, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace ndps
