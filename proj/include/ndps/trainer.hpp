#ifndef NDPS_TRAINER_HPP
#define NDPS_TRAINER_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ndps/adversary.hpp"
#include "ndps/generator.hpp"
#include "ndps/random.hpp"
#include "ndps/spectral.hpp"
#include "ndps/tensor.hpp"

namespace ndps {

// Optimization-loop settings. warmup_steps < 0 selects the default warm-up
// of total_steps / 10 during which only the STFT criterion trains the
// generator and the discriminator is untouched.
struct TrainConfig {
  double lr_init = 0.001;
  double decay = 0.5;  // multiplicative factor per decay interval
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch = 1;
  int clip_samples = 8000;  // training excerpt length, multiple of 80
  int total_steps = 1;
  int warmup_steps = -1;
  double lambda = kDefaultLambda;
  std::uint64_t seed = 0;

  int resolved_warmup() const {
    return warmup_steps >= 0 ? warmup_steps : total_steps / 10;
  }
  // The learning rate halves (decays) every quarter of the run.
  int decay_interval() const { return std::max(1, total_steps / 4); }
};

void validate_config(const TrainConfig& cfg);

// lr_init * decay^k with k = step / decay_interval, computed by repeated
// multiplication so the schedule is exact.
double learning_rate(const TrainConfig& cfg, std::int64_t step);

// First and second Adam moments per parameter plus the shared update count.
struct AdamState {
  std::int64_t t = 0;
  std::map<std::string, std::vector<double>> m, v;
};

// One bias-corrected Adam update over every parameter whose name starts
// with `prefix`, consuming the gradients accumulated in the store. Moment
// slots are created on first use; a stored moment whose size disagrees with
// its parameter raises ShapeError.
void adam_step(ParamStore& store, AdamState& state, const std::string& prefix,
               const TrainConfig& cfg, double lr);

// One training example: conditioning plus the aligned target waveform.
struct Clip {
  MelSpectrogram mel;
  std::vector<double> wave;
};

// An utterance available to the clip sampler (same layout as Clip but kept
// distinct in intent: clips are fixed-length excerpts of utterances).
using Utterance = Clip;

// Everything the loop mutates.
struct TrainerState {
  GeneratorConfig gen_cfg;
  DiscriminatorConfig disc_cfg;
  TrainConfig cfg;
  ParamStore store;  // "g.*" and "d.*"
  AdamState adam_g, adam_d;
  std::int64_t step = 0;
  RandomStream data_rng;
  RandomStream noise_rng;
  FilterBank bank;  // defined in multiband mode
};

// Fresh state with initialized parameters; seeds the parameter, data, and
// noise streams from cfg.seed.
TrainerState make_trainer(const GeneratorConfig& gen_cfg,
                          const DiscriminatorConfig& disc_cfg,
                          const TrainConfig& cfg);

// Draws `batch` hop-aligned fixed-length clips from the utterances.
// Utterances shorter than clip_samples are taken whole.
std::vector<Clip> sample_batch(TrainerState& state,
                               const std::vector<Utterance>& data);

// One step: discriminator update on detached synthesis (skipped during
// warm-up), then a generator update on l_stft + lambda * l_adv. Returns the
// averaged loss components; during warm-up l_adv is reported as 0. A clip
// whose waveform length is not 80 * mel frames raises DataError.
LossReport train_step(TrainerState& state, const std::vector<Clip>& batch);

// Tab-separated training log: step, lr, l_sc, l_mag, l_stft, l_adv, l_comb.
void write_log_header(std::ostream& os);
void write_log_row(std::ostream& os, std::int64_t step, double lr,
                   const LossReport& report);

// --- checkpointing ----------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;

// On-disk training snapshot. Load failures surface IntegrityError carrying
// the byte offset of the first inconsistency.
struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  GeneratorConfig gen_cfg;
  ParamStore params;
  AdamState adam_g, adam_d;
  std::int64_t step = 0;
  std::string data_rng_state, noise_rng_state;
};

Checkpoint snapshot(const TrainerState& state);
// Restores everything snapshot() captured; the train/discriminator configs
// come from the caller as they live in the config file, not the checkpoint.
void restore(TrainerState& state, const Checkpoint& ck);

void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace ndps

#endif  // NDPS_TRAINER_HPP
