#ifndef NDPS_CLI_IO_HPP
#define NDPS_CLI_IO_HPP

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ndps/adversary.hpp"
#include "ndps/generator.hpp"
#include "ndps/spectral.hpp"
#include "ndps/trainer.hpp"

namespace ndps {

// PCM16 mono audio interpreted as reals in [-1, 1).
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;
};

// Strict reader: RIFF/WAVE, PCM, 16-bit, mono, 16 kHz; anything else is a
// FormatError naming the offending field.
Waveform read_wav(const std::string& path);

// 16-bit mono 16 kHz writer; values outside [-1, 1) are clamped to the
// nearest representable code. Samples surviving a read round-trip
// bit-identically.
void write_wav(const std::string& path, const std::vector<double>& samples);

struct ManifestEntry {
  std::string id;
  std::string audio_path;
  std::string feature_path;
};

// Utterance list: one "id<TAB>audio<TAB>features" line per entry, optional
// leading "split<TAB>train|valid|test" line, '#' comments. Relative paths
// resolve against the manifest's directory. Duplicate ids are a
// FormatError; a missing audio file (or feature file when required) is a
// DataError.
struct DatasetManifest {
  std::string split = "train";
  std::vector<ManifestEntry> entries;
};

DatasetManifest load_manifest(const std::string& path,
                              bool require_features = false);

struct FeaturePrepResult {
  int processed = 0;
  int failed = 0;
};

// Extracts mel features for every entry, writing one feature file per
// utterance at the manifest's feature path. A per-file failure is logged
// and the run continues. Re-running produces byte-identical files. An
// empty manifest logs a warning and does nothing.
FeaturePrepResult prepare_features(const DatasetManifest& manifest,
                                   std::ostream& log);

// Paired clips for the trainer: features from the feature file, audio from
// the WAV, zero-padded at the tail to 80 x frames samples.
std::vector<Utterance> load_utterances(const DatasetManifest& manifest);

// Flat key=value configuration, '#' comments and blank lines ignored.
std::map<std::string, std::string> read_config(const std::string& path);

// Applies "key=value" override strings on top of the file values.
void apply_overrides(std::map<std::string, std::string>& config,
                     const std::vector<std::string>& overrides);

// Everything the train subcommand needs. Recognized keys: model
// (toy|paper), mode (full_band|multiband), bands, steps, batch,
// clip_samples, lr, decay, lambda, warmup, seed. Unknown keys are a
// FormatError so typos cannot silently fall back to defaults.
struct ToolkitConfig {
  GeneratorConfig gen;
  DiscriminatorConfig disc;
  TrainConfig train;
};

ToolkitConfig parse_toolkit_config(
    const std::map<std::string, std::string>& config);

// Command-line entry point; args[0] is the program name. Subcommands:
// features, train, synth, eval, edit-noise, design-fb. Returns 0 on
// success, 1 on usage errors, 2 on runtime failures.
int run_cli(const std::vector<std::string>& args);

}  // namespace ndps

#endif  // NDPS_CLI_IO_HPP
