#include "ndps/generator.hpp"

#include <cmath>
#include <string>

#include "ndps/ops.hpp"

namespace ndps {

namespace {

constexpr int kCondChannels = kMelBins;

std::string idx(const char* base, int i) {
  return std::string(base) + std::to_string(i);
}

std::string layer_prefix(const char* base, int block, int layer) {
  return std::string(base) + ".b" + std::to_string(block) + ".l" +
         std::to_string(layer);
}

// One record per convolution of the architecture; creation and traversal
// both walk this schema so names can never drift apart.
struct ConvSpec {
  std::string prefix;
  int out_ch, in_ch, k;
  bool transposed;
};

void push_dilated_block(std::vector<ConvSpec>& specs, const char* base,
                        int blocks, const GeneratorConfig& cfg) {
  const int R = cfg.residual_channels;
  const int G = cfg.gate_channels;
  const int S = cfg.skip_channels;
  for (int b = 0; b < blocks; ++b)
    for (int l = 0; l < 3; ++l) {
      const std::string p = layer_prefix(base, b, l);
      specs.push_back({p + ".dil", G, R, cfg.kernel_size, false});
      specs.push_back({p + ".cond", G, R, 1, false});
      // The residual feed of the very last layer has no consumer (only the
      // skip sum reaches the output), so it is omitted rather than left as
      // a dead parameter.
      if (b + 1 < blocks || l < 2)
        specs.push_back({p + ".res", R, G / 2, 1, false});
      specs.push_back({p + ".skip", S, G / 2, 1, false});
    }
  specs.push_back({std::string(base) + ".out", 1, S, 1, false});
}

std::vector<ConvSpec> conv_schema(const GeneratorConfig& cfg) {
  validate_config(cfg);
  const int R = cfg.residual_channels;
  const int K = cfg.kernel_size;
  std::vector<ConvSpec> specs;

  specs.push_back({"g.cond.in", R, kCondChannels, K, false});
  for (std::size_t i = 0; i < cfg.upsample_rates.size(); ++i)
    specs.push_back({idx("g.cond.up", static_cast<int>(i)), R, R,
                     2 * cfg.upsample_rates[i], true});

  specs.push_back({"g.det.in", R, kCondChannels, K, false});
  for (int i = 0; i < cfg.det_stages; ++i) {
    specs.push_back({idx("g.det.up", i), R, R,
                     2 * cfg.upsample_rates[static_cast<std::size_t>(i)],
                     true});
    for (int j = 0; j < 3; ++j)
      specs.push_back({"g.det.res" + std::to_string(i) + "." +
                           std::to_string(j),
                       R, R, K, false});
  }
  specs.push_back({"g.det.out", 1, R, 1, false});

  specs.push_back({"g.sto.in", R, 1, 1, false});
  push_dilated_block(specs, "g.sto", cfg.sto_blocks, cfg);

  specs.push_back({"g.vuv.ctx0", R, kCondChannels, K, false});
  specs.push_back({"g.vuv.ctx1", R, R, K, false});
  for (int k = 0; k < cfg.m_bands; ++k) {
    specs.push_back({idx("g.vuv.d", k), 1, R, 1, false});
    specs.push_back({idx("g.vuv.s", k), 1, R, 1, false});
  }

  specs.push_back({"g.filt.in", R, cfg.filter_channels(), 1, false});
  push_dilated_block(specs, "g.filt", cfg.filt_blocks, cfg);
  return specs;
}

// Parameter access shared by the module functions.
struct Ctx {
  ParamStore& store;
  bool grad;

  Tensor w(const std::string& prefix) {
    return param_leaf(store, prefix + ".w", grad);
  }
  Tensor b(const std::string& prefix) {
    return param_leaf(store, prefix + ".b", grad);
  }
};

Tensor conv(Ctx& ctx, const std::string& prefix, const Tensor& x,
            int dilation) {
  Tensor w = ctx.w(prefix);
  const int k = w.dims()[2];
  return conv1d(x, w, ctx.b(prefix), dilation, dilation * (k - 1) / 2);
}

Tensor tconv(Ctx& ctx, const std::string& prefix, const Tensor& x,
             int stride) {
  return transposed_conv1d(x, ctx.w(prefix), ctx.b(prefix), stride);
}

void check_condition(const Tensor& c) {
  if (!c.defined() || c.ndim() != 2 || c.channels() != kCondChannels)
    throw ArgumentError("generator: conditioning must be [80 x B]");
}

// Gated dilated blocks with skip-sum readout, shared by the stochastic
// source and the neural filter.
Tensor dilated_stack(Ctx& ctx, const char* base, int blocks,
                     const Tensor& in_proj, const Tensor& cond) {
  Tensor x = in_proj;
  Tensor skip;
  for (int b = 0; b < blocks; ++b)
    for (int l = 0; l < 3; ++l) {
      const std::string p = layer_prefix(base, b, l);
      Tensor z = gated_activation(conv(ctx, p + ".dil", x, 1 << l),
                                  conv(ctx, p + ".cond", cond, 1));
      if (b + 1 < blocks || l < 2)  // last layer feeds the skip sum only
        x = add(x, conv(ctx, p + ".res", z, 1));
      Tensor s = conv(ctx, p + ".skip", z, 1);
      skip = skip.defined() ? add(skip, s) : s;
    }
  return conv(ctx, std::string(base) + ".out", ndps::tanh(skip), 1);
}

}  // namespace

int GeneratorConfig::hop() const {
  int h = 1;
  for (int r : upsample_rates) h *= r;
  return h;
}

int GeneratorConfig::filter_channels() const {
  return mode == GeneratorMode::full_band ? 2 : 2 * m_bands;
}

void validate_config(const GeneratorConfig& cfg) {
  if (cfg.mode == GeneratorMode::full_band) {
    if (cfg.m_bands != 1)
      throw ArgumentError("generator: full-band mode requires m_bands = 1");
  } else if (cfg.m_bands < 2) {
    throw ArgumentError("generator: multiband mode requires m_bands >= 2");
  }
  if (cfg.gate_channels < 2 || cfg.gate_channels % 2 != 0)
    throw ArgumentError("generator: gate_channels must be positive and even");
  if (cfg.residual_channels < 1 || cfg.skip_channels < 1)
    throw ArgumentError("generator: channel counts must be positive");
  if (cfg.upsample_rates.empty())
    throw ArgumentError("generator: upsample schedule is empty");
  for (int r : cfg.upsample_rates)
    if (r < 1) throw ArgumentError("generator: upsample rates must be >= 1");
  if (cfg.hop() != kMelHop)
    throw ArgumentError("generator: upsample rates must multiply to 80");
  if (cfg.det_stages != static_cast<int>(cfg.upsample_rates.size()))
    throw ArgumentError(
        "generator: det_stages must match the upsample schedule");
  if (cfg.sto_blocks < 1 || cfg.filt_blocks < 1)
    throw ArgumentError("generator: block counts must be positive");
  if (cfg.kernel_size < 1 || cfg.kernel_size % 2 == 0)
    throw ArgumentError("generator: kernel_size must be odd");
}

GeneratorConfig paper_config(GeneratorMode mode, int m_bands) {
  GeneratorConfig cfg;
  cfg.mode = mode;
  cfg.m_bands = mode == GeneratorMode::full_band ? 1 : m_bands;
  validate_config(cfg);
  return cfg;
}

GeneratorConfig toy_config(GeneratorMode mode, int m_bands) {
  GeneratorConfig cfg;
  cfg.mode = mode;
  cfg.m_bands = mode == GeneratorMode::full_band ? 1 : m_bands;
  cfg.gate_channels = 8;
  cfg.residual_channels = 8;
  cfg.skip_channels = 8;
  cfg.filt_blocks = 2;
  validate_config(cfg);
  return cfg;
}

void init_generator_params(ParamStore& store, const GeneratorConfig& cfg,
                           RandomStream& rng) {
  for (const ConvSpec& s : conv_schema(cfg)) {
    // fan_in counts input channels times taps for both conv layouts.
    const double bound = std::sqrt(1.0 / (s.in_ch * s.k));
    Parameter& w = store.create(
        s.prefix + ".w", s.transposed
                             ? std::vector<int>{s.in_ch, s.out_ch, s.k}
                             : std::vector<int>{s.out_ch, s.in_ch, s.k});
    for (double& v : w.value) v = bound * (2.0 * rng.uniform() - 1.0);
    store.create(s.prefix + ".b", {s.out_ch});  // biases start at zero
  }
}

Tensor condition_upsample(const Tensor& c, ParamStore& store,
                          const GeneratorConfig& cfg, bool with_grad) {
  validate_config(cfg);
  check_condition(c);
  Ctx ctx{store, with_grad};
  Tensor h = ndps::tanh(conv(ctx, "g.cond.in", c, 1));
  for (std::size_t i = 0; i < cfg.upsample_rates.size(); ++i)
    h = ndps::tanh(tconv(ctx, idx("g.cond.up", static_cast<int>(i)), h,
                         cfg.upsample_rates[i]));
  return h;
}

Tensor deterministic_source(const Tensor& c, ParamStore& store,
                            const GeneratorConfig& cfg, bool with_grad) {
  validate_config(cfg);
  check_condition(c);
  Ctx ctx{store, with_grad};
  Tensor h = ndps::tanh(conv(ctx, "g.det.in", c, 1));
  for (int i = 0; i < cfg.det_stages; ++i) {
    h = ndps::tanh(tconv(ctx, idx("g.det.up", i), h,
                         cfg.upsample_rates[static_cast<std::size_t>(i)]));
    for (int j = 0; j < 3; ++j) {
      const std::string p =
          "g.det.res" + std::to_string(i) + "." + std::to_string(j);
      h = add(h, ndps::tanh(conv(ctx, p, h, 1 << j)));
    }
  }
  return conv(ctx, "g.det.out", h, 1);
}

Tensor stochastic_source(const Tensor& g, const Tensor& cond,
                         ParamStore& store, const GeneratorConfig& cfg,
                         bool with_grad) {
  validate_config(cfg);
  if (!g.defined() || g.ndim() != 2 || g.channels() != 1)
    throw ArgumentError("stochastic_source: noise must be [1 x T]");
  if (!cond.defined() || cond.ndim() != 2 ||
      cond.channels() != cfg.residual_channels)
    throw ArgumentError(
        "stochastic_source: conditioning width must be residual_channels");
  if (g.length() != cond.length())
    throw ArgumentError("stochastic_source: noise/conditioning length "
                        "mismatch");
  Ctx ctx{store, with_grad};
  Tensor x = ndps::tanh(conv(ctx, "g.sto.in", g, 1));
  return dilated_stack(ctx, "g.sto", cfg.sto_blocks, x, cond);
}

MaskSet vuv_masks(const Tensor& c, ParamStore& store,
                  const GeneratorConfig& cfg, bool with_grad) {
  validate_config(cfg);
  check_condition(c);
  Ctx ctx{store, with_grad};
  Tensor h = ndps::tanh(conv(ctx, "g.vuv.ctx0", c, 1));
  h = ndps::tanh(conv(ctx, "g.vuv.ctx1", h, 1));
  MaskSet masks;
  for (int k = 0; k < cfg.m_bands; ++k) {
    masks.frame_d.push_back(sigmoid(conv(ctx, idx("g.vuv.d", k), h, 1)));
    masks.frame_s.push_back(sigmoid(conv(ctx, idx("g.vuv.s", k), h, 1)));
    masks.sample_d.push_back(repeat_upsample(masks.frame_d.back(), kMelHop));
    masks.sample_s.push_back(repeat_upsample(masks.frame_s.back(), kMelHop));
  }
  return masks;
}

MaskSet apply_noise_offset(const MaskSet& masks, const NoiseControl& ctrl) {
  if (!(ctrl.mu >= -1.0 && ctrl.mu <= 1.0))
    throw ArgumentError("apply_noise_offset: mu must lie in [-1, 1]");
  std::vector<bool> selected(static_cast<std::size_t>(masks.bands()),
                             ctrl.bands.empty());
  for (int k : ctrl.bands) {
    if (k < 0 || k >= masks.bands())
      throw ArgumentError("apply_noise_offset: band index out of range");
    selected[static_cast<std::size_t>(k)] = true;
  }
  MaskSet out;
  out.frame_d = masks.frame_d;
  out.sample_d = masks.sample_d;
  for (int k = 0; k < masks.bands(); ++k) {
    const auto ks = static_cast<std::size_t>(k);
    if (!selected[ks]) {
      out.frame_s.push_back(masks.frame_s[ks]);
      out.sample_s.push_back(masks.sample_s[ks]);
      continue;
    }
    Tensor shifted = offset_clip01(masks.frame_s[ks], ctrl.mu);
    const int factor = masks.sample_s[ks].length() / shifted.length();
    out.frame_s.push_back(shifted);
    out.sample_s.push_back(repeat_upsample(shifted, factor));
  }
  return out;
}

Tensor assemble_excitation(ExcitationSet& exc, const MaskSet& masks,
                           const FilterBank* bank,
                           const GeneratorConfig& cfg) {
  validate_config(cfg);
  const int expected =
      cfg.mode == GeneratorMode::full_band ? 1 : cfg.m_bands;
  if (masks.bands() != expected)
    throw ArgumentError("assemble_excitation: band count mismatch");
  if (cfg.mode == GeneratorMode::full_band)
    return concat_channels({mul(masks.sample_d[0], exc.e_d),
                            mul(masks.sample_s[0], exc.e_s)});
  if (bank == nullptr)
    throw ArgumentError("assemble_excitation: multiband mode needs a bank");
  if (bank->m != cfg.m_bands)
    throw ArgumentError("assemble_excitation: band count mismatch");
  exc.subbands_d = decompose(exc.e_d, *bank);
  exc.subbands_s = decompose(exc.e_s, *bank);
  Tensor masked_d = mul(concat_channels(masks.sample_d), exc.subbands_d);
  Tensor masked_s = mul(concat_channels(masks.sample_s), exc.subbands_s);
  return concat_channels({masked_d, masked_s});
}

Tensor neural_filter(const Tensor& input, const Tensor& cond,
                     ParamStore& store, const GeneratorConfig& cfg,
                     bool with_grad) {
  validate_config(cfg);
  if (!input.defined() || input.ndim() != 2 ||
      input.channels() != cfg.filter_channels())
    throw ArgumentError("neural_filter: excitation channel count mismatch");
  if (!cond.defined() || cond.ndim() != 2 ||
      cond.channels() != cfg.residual_channels)
    throw ArgumentError(
        "neural_filter: conditioning width must be residual_channels");
  if (input.length() != cond.length())
    throw ArgumentError("neural_filter: excitation/conditioning length "
                        "mismatch");
  Ctx ctx{store, with_grad};
  Tensor x = ndps::tanh(conv(ctx, "g.filt.in", input, 1));
  return dilated_stack(ctx, "g.filt", cfg.filt_blocks, x, cond);
}

GeneratorOutput generator_forward(const Tensor& c, const Tensor& g,
                                  const NoiseControl& ctrl, ParamStore& store,
                                  const GeneratorConfig& cfg,
                                  const FilterBank* bank, bool with_grad) {
  GeneratorOutput out;
  out.cond = condition_upsample(c, store, cfg, with_grad);
  out.excitation.e_d = deterministic_source(c, store, cfg, with_grad);
  out.excitation.e_s = stochastic_source(g, out.cond, store, cfg, with_grad);
  out.masks = apply_noise_offset(vuv_masks(c, store, cfg, with_grad), ctrl);
  out.excitation_input =
      assemble_excitation(out.excitation, out.masks, bank, cfg);
  out.waveform = neural_filter(out.excitation_input, out.cond, store, cfg,
                               with_grad);
  return out;
}

std::vector<double> synthesize(const MelSpectrogram& mel, std::uint64_t seed,
                               const NoiseControl& ctrl, ParamStore& store,
                               const GeneratorConfig& cfg) {
  validate_config(cfg);
  Tensor c = condition_tensor(mel);
  const int T = cfg.hop() * mel.frames;
  RandomStream rng(seed);
  std::vector<double> noise(static_cast<std::size_t>(T));
  for (double& v : noise) v = rng.gaussian();
  FilterBank bank;
  const FilterBank* bank_ptr = nullptr;
  if (cfg.mode == GeneratorMode::multiband) {
    bank = make_filter_bank(cfg.m_bands);
    bank_ptr = &bank;
  }
  GeneratorOutput out =
      generator_forward(c, Tensor::signal(noise), ctrl, store, cfg, bank_ptr,
                        /*with_grad=*/false);
  return out.waveform.values();
}

}  // namespace ndps
