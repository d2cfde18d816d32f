#ifndef NDPS_GENERATOR_HPP
#define NDPS_GENERATOR_HPP

#include <cstdint>
#include <vector>

#include "ndps/filterbank.hpp"
#include "ndps/random.hpp"
#include "ndps/spectral.hpp"
#include "ndps/tensor.hpp"

namespace ndps {

enum class GeneratorMode { full_band, multiband };

// Architecture of the waveform generator: deterministic source, stochastic
// source, voiced/unvoiced masks, and the neural filter. Dilated blocks hold
// three layers with dilations 1, 2, 4.
struct GeneratorConfig {
  GeneratorMode mode = GeneratorMode::full_band;
  int m_bands = 1;  // 1 in full-band mode, >= 2 in multiband mode
  int gate_channels = 64;
  int residual_channels = 64;
  int skip_channels = 64;
  std::vector<int> upsample_rates = {5, 4, 4};
  int det_stages = 3;   // transposed-conv / residual-stack alternations
  int sto_blocks = 1;   // dilated blocks in the stochastic source
  int filt_blocks = 8;  // dilated blocks in the neural filter
  int kernel_size = 3;

  int hop() const;             // product of upsample_rates (must be 80)
  int filter_channels() const;  // excitation channels into the neural filter
};

// Throws ArgumentError when a field violates the architecture contract.
void validate_config(const GeneratorConfig& cfg);

// Full-scale configuration (64-channel, 8 filter blocks).
GeneratorConfig paper_config(GeneratorMode mode, int m_bands = 1);
// Desk-scale configuration for tests: 8 channels, 2 filter blocks, same
// structure otherwise.
GeneratorConfig toy_config(GeneratorMode mode, int m_bands = 1);

// Frame-level and sample-level voiced/unvoiced masks, one pair per band.
// Sample masks repeat each frame value over its 80-sample span.
struct MaskSet {
  std::vector<Tensor> frame_d, frame_s;    // [1 x B] each
  std::vector<Tensor> sample_d, sample_s;  // [1 x T]

  int bands() const { return static_cast<int>(frame_d.size()); }
};

// Source signals feeding the neural filter. The subband tensors are filled
// by assemble_excitation in multiband mode.
struct ExcitationSet {
  Tensor e_d, e_s;                // [1 x T]
  Tensor subbands_d, subbands_s;  // [M x T]
};

// Test-time noise control: a constant offset added to the stochastic masks
// of the selected bands (empty selector = every band).
struct NoiseControl {
  double mu = 0.0;
  std::vector<int> bands;
};

struct GeneratorOutput {
  Tensor cond;        // upsampled conditioning [R x T]
  ExcitationSet excitation;
  MaskSet masks;
  Tensor excitation_input;  // [2 x T] or [2M x T]
  Tensor waveform;          // [1 x T]
};

// Creates every generator parameter (prefix "g.") with uniform
// +-sqrt(1/fan_in) weights and zero biases. Throws ArgumentError if any of
// the names already exist.
void init_generator_params(ParamStore& store, const GeneratorConfig& cfg,
                           RandomStream& rng);

// Mel conditioning [80 x B] -> hidden features [residual_channels x 80B]
// via an input convolution and one transposed convolution per upsample rate.
Tensor condition_upsample(const Tensor& c, ParamStore& store,
                          const GeneratorConfig& cfg, bool with_grad = true);

// Mel conditioning -> deterministic excitation e_d [1 x 80B]: alternating
// transposed convolutions and dilated residual stacks, no noise input.
Tensor deterministic_source(const Tensor& c, ParamStore& store,
                            const GeneratorConfig& cfg, bool with_grad = true);

// Noise g [1 x T] plus upsampled conditioning -> stochastic excitation e_s
// [1 x T]. Throws ArgumentError when lengths disagree.
Tensor stochastic_source(const Tensor& g, const Tensor& cond,
                         ParamStore& store, const GeneratorConfig& cfg,
                         bool with_grad = true);

// Mel conditioning -> per-band sigmoid masks at frame level, repeated to
// sample level. Multiband mode emits 2*m_bands heads, full-band mode 2.
MaskSet vuv_masks(const Tensor& c, ParamStore& store,
                  const GeneratorConfig& cfg, bool with_grad = true);

// Offsets the stochastic masks of the selected bands by mu and clips to
// [0, 1]; deterministic masks pass through untouched. Throws ArgumentError
// for mu outside [-1, 1] or a band index out of range.
MaskSet apply_noise_offset(const MaskSet& masks, const NoiseControl& ctrl);

// Masks the excitations and concatenates them into the filter input. In
// multiband mode both sources are decomposed through `bank` first (and the
// subband tensors of `exc` are filled); full-band mode ignores `bank`.
Tensor assemble_excitation(ExcitationSet& exc, const MaskSet& masks,
                           const FilterBank* bank,
                           const GeneratorConfig& cfg);

// Masked excitation [filter_channels x T] -> waveform [1 x T] through
// filt_blocks dilated blocks with conditioning.
Tensor neural_filter(const Tensor& input, const Tensor& cond,
                     ParamStore& store, const GeneratorConfig& cfg,
                     bool with_grad = true);

// Full differentiable pipeline. `bank` is required in multiband mode.
GeneratorOutput generator_forward(const Tensor& c, const Tensor& g,
                                  const NoiseControl& ctrl, ParamStore& store,
                                  const GeneratorConfig& cfg,
                                  const FilterBank* bank,
                                  bool with_grad = true);

// Inference: mel features in, waveform out. Deterministic given (mel, seed,
// ctrl, params); builds no gradient graph.
std::vector<double> synthesize(const MelSpectrogram& mel, std::uint64_t seed,
                               const NoiseControl& ctrl, ParamStore& store,
                               const GeneratorConfig& cfg);

}  // namespace ndps

#endif  // NDPS_GENERATOR_HPP
