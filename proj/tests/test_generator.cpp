#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "doctest.h"
#include "ndps/generator.hpp"
#include "ndps/ops.hpp"
#include "oracles.hpp"

using namespace ndps;

namespace {

Tensor random_condition(int frames, RandomStream& rng) {
  std::vector<double> v(static_cast<std::size_t>(kMelBins * frames));
  for (double& x : v) x = rng.gaussian();
  return Tensor::from_values({kMelBins, frames}, std::move(v));
}

Tensor random_noise(int length, RandomStream& rng) {
  std::vector<double> v(static_cast<std::size_t>(length));
  for (double& x : v) x = rng.gaussian();
  return Tensor::signal(v);
}

ParamStore make_store(const GeneratorConfig& cfg, std::uint64_t seed) {
  ParamStore store;
  RandomStream rng(seed);
  init_generator_params(store, cfg, rng);
  return store;
}

MelSpectrogram random_mel(int frames, std::uint64_t seed) {
  MelSpectrogram mel;
  mel.frames = frames;
  mel.values.resize(static_cast<std::size_t>(frames) * kMelBins);
  RandomStream rng(seed);
  for (double& v : mel.values) v = rng.gaussian();
  return mel;
}

}  // namespace

TEST_CASE("generator config validation") {
  CHECK_NOTHROW(validate_config(paper_config(GeneratorMode::full_band)));
  CHECK_NOTHROW(validate_config(paper_config(GeneratorMode::multiband, 2)));
  CHECK_NOTHROW(validate_config(toy_config(GeneratorMode::multiband, 4)));

  GeneratorConfig cfg = toy_config(GeneratorMode::full_band);
  cfg.m_bands = 2;
  CHECK_THROWS_AS(validate_config(cfg), ArgumentError);

  cfg = toy_config(GeneratorMode::multiband, 2);
  cfg.m_bands = 1;
  CHECK_THROWS_AS(validate_config(cfg), ArgumentError);

  cfg = toy_config(GeneratorMode::full_band);
  cfg.gate_channels = 7;
  CHECK_THROWS_AS(validate_config(cfg), ArgumentError);

  cfg = toy_config(GeneratorMode::full_band);
  cfg.upsample_rates = {5, 4, 2};  // product 40
  cfg.det_stages = 3;
  CHECK_THROWS_AS(validate_config(cfg), ArgumentError);

  cfg = toy_config(GeneratorMode::full_band);
  cfg.det_stages = 2;  // schedule has three stages
  CHECK_THROWS_AS(validate_config(cfg), ArgumentError);

  cfg = toy_config(GeneratorMode::full_band);
  cfg.kernel_size = 4;
  CHECK_THROWS_AS(validate_config(cfg), ArgumentError);

  const GeneratorConfig full = paper_config(GeneratorMode::full_band);
  CHECK(full.hop() == 80);
  CHECK(full.filter_channels() == 2);
  CHECK(full.upsample_rates == std::vector<int>{5, 4, 4});
  CHECK(full.gate_channels == 64);
  CHECK(full.filt_blocks == 8);
  const GeneratorConfig mbe = paper_config(GeneratorMode::multiband, 4);
  CHECK(mbe.filter_channels() == 8);
  const GeneratorConfig toy = toy_config(GeneratorMode::multiband, 2);
  CHECK(toy.filter_channels() == 4);
  CHECK(toy.residual_channels == 8);
  CHECK(toy.filt_blocks == 2);
}

TEST_CASE("parameter initialization") {
  const GeneratorConfig cfg = toy_config(GeneratorMode::multiband, 2);
  ParamStore store = make_store(cfg, 1);

  SUBCASE("structure") {
    // Stochastic source: one block of three layers. Neural filter: two toy
    // blocks. Deterministic source: one stage per upsample rate.
    CHECK(store.has("g.sto.b0.l2.dil.w"));
    CHECK_FALSE(store.has("g.sto.b1.l0.dil.w"));
    CHECK(store.has("g.filt.b1.l2.skip.w"));
    CHECK_FALSE(store.has("g.filt.b2.l0.dil.w"));
    // The last layer of each stack carries no residual projection.
    CHECK(store.has("g.sto.b0.l1.res.w"));
    CHECK_FALSE(store.has("g.sto.b0.l2.res.w"));
    CHECK_FALSE(store.has("g.filt.b1.l2.res.w"));
    CHECK(store.has("g.det.up2.w"));
    CHECK(store.has("g.det.res2.2.w"));
    CHECK(store.has("g.vuv.d1.w"));
    CHECK(store.has("g.vuv.s1.w"));
    CHECK_FALSE(store.has("g.vuv.d2.w"));

    // Filter input width doubles per band pair: 4 channels at M = 2.
    CHECK(store.at("g.filt.in.w").dims == std::vector<int>{8, 4, 1});
    CHECK(store.at("g.sto.b0.l0.dil.w").dims == std::vector<int>{8, 8, 3});
    // Transposed-conv kernels span twice their stride.
    CHECK(store.at("g.cond.up0.w").dims == std::vector<int>{8, 8, 10});
    CHECK(store.at("g.cond.up1.w").dims == std::vector<int>{8, 8, 8});

    const GeneratorConfig paper = paper_config(GeneratorMode::multiband, 2);
    ParamStore big = make_store(paper, 1);
    CHECK(big.has("g.filt.b7.l2.dil.w"));    // 8 blocks x 3 = 24 layers
    CHECK_FALSE(big.has("g.filt.b8.l0.dil.w"));

    const GeneratorConfig full = paper_config(GeneratorMode::full_band);
    ParamStore fb = make_store(full, 1);
    CHECK(fb.has("g.vuv.d0.w"));
    CHECK_FALSE(fb.has("g.vuv.d1.w"));
    CHECK(fb.at("g.filt.in.w").dims == std::vector<int>{64, 2, 1});
  }

  SUBCASE("values") {
    // Biases zero, weights inside the +-sqrt(1/fan_in) bound, reproducible.
    // Every weight tensor here has matching input/output widths on the
    // transposed kernels, so fan_in is dims[1] * dims[2] throughout.
    for (const auto& [name, p] : store.entries()) {
      if (name.ends_with(".b")) {
        for (double v : p.value) CHECK(v == 0.0);
      } else {
        const double bound = std::sqrt(1.0 / (p.dims[1] * p.dims[2]));
        double max_abs = 0.0;
        for (double v : p.value) max_abs = std::max(max_abs, std::abs(v));
        CHECK(max_abs > 0.0);
        CHECK(max_abs <= bound);
      }
    }
    ParamStore again = make_store(cfg, 1);
    for (const auto& [name, p] : store.entries())
      CHECK(again.at(name).value == p.value);

    CHECK_THROWS_AS(
        [&] {
          RandomStream rng(2);
          init_generator_params(store, cfg, rng);
        }(),
        ArgumentError);
  }
}

TEST_CASE("condition upsampling") {
  const GeneratorConfig cfg = toy_config(GeneratorMode::full_band);
  ParamStore store = make_store(cfg, 3);
  RandomStream rng(7);

  Tensor c = random_condition(10, rng);
  Tensor up = condition_upsample(c, store, cfg);
  CHECK(up.channels() == cfg.residual_channels);
  CHECK(up.length() == 800);

  CHECK_THROWS_AS(condition_upsample(Tensor::zeros({16, 4}), store, cfg),
                  ArgumentError);

  // Zeroed convolution weights (biases start at zero) give a zero output.
  ParamStore zeroed = make_store(cfg, 3);
  for (auto& [name, p] : zeroed.entries())
    std::fill(p.value.begin(), p.value.end(), 0.0);
  Tensor flat = condition_upsample(c, zeroed, cfg);
  for (double v : flat.values()) CHECK(v == 0.0);
}

TEST_CASE("deterministic source") {
  const GeneratorConfig cfg = toy_config(GeneratorMode::full_band);
  ParamStore store = make_store(cfg, 4);
  RandomStream rng(8);

  Tensor c = random_condition(5, rng);
  Tensor e1 = deterministic_source(c, store, cfg);
  CHECK(e1.channels() == 1);
  CHECK(e1.length() == 400);

  // No noise path: identical conditioning reproduces identical samples.
  Tensor e2 = deterministic_source(c, store, cfg);
  CHECK(e1.values() == e2.values());

  ParamStore zeroed = make_store(cfg, 4);
  for (auto& [name, p] : zeroed.entries())
    std::fill(p.value.begin(), p.value.end(), 0.0);
  Tensor flat = deterministic_source(c, zeroed, cfg);
  for (double v : flat.values()) CHECK(v == 0.0);
}

TEST_CASE("stochastic source") {
  const GeneratorConfig cfg = toy_config(GeneratorMode::full_band);
  ParamStore store = make_store(cfg, 5);
  RandomStream rng(9);

  const int B = 2, T = 80 * B;
  Tensor c = random_condition(B, rng);
  Tensor cond = condition_upsample(c, store, cfg);
  Tensor g = random_noise(T, rng);

  Tensor e = stochastic_source(g, cond, store, cfg);
  CHECK(e.channels() == 1);
  CHECK(e.length() == T);

  // Deterministic given the noise vector.
  Tensor e2 = stochastic_source(g, cond, store, cfg);
  CHECK(e.values() == e2.values());

  // Zero noise and zero conditioning propagate to a zero excitation
  // because every bias starts at zero.
  Tensor silent = stochastic_source(Tensor::zeros({1, T}),
                                    Tensor::zeros({8, T}), store, cfg);
  for (double v : silent.values()) CHECK(v == 0.0);

  CHECK_THROWS_AS(stochastic_source(Tensor::zeros({1, T + 1}), cond, store,
                                    cfg),
                  ArgumentError);
  CHECK_THROWS_AS(stochastic_source(Tensor::zeros({2, T}), cond, store, cfg),
                  ArgumentError);
  CHECK_THROWS_AS(stochastic_source(g, Tensor::zeros({4, T}), store, cfg),
                  ArgumentError);
}

TEST_CASE("vuv masks") {
  const GeneratorConfig cfg = toy_config(GeneratorMode::multiband, 2);
  ParamStore store = make_store(cfg, 6);
  RandomStream rng(10);

  const int B = 3;
  Tensor c = random_condition(B, rng);
  MaskSet masks = vuv_masks(c, store, cfg);

  CHECK(masks.bands() == 2);  // four heads total: d0, d1, s0, s1
  CHECK(masks.frame_s.size() == 2);
  for (int k = 0; k < 2; ++k) {
    const auto ks = static_cast<std::size_t>(k);
    CHECK(masks.frame_d[ks].length() == B);
    CHECK(masks.sample_d[ks].length() == 80 * B);
    for (double v : masks.frame_d[ks].values()) {
      CHECK(v > 0.0);
      CHECK(v < 1.0);
    }
    // Sample masks repeat each frame value across its 80-sample span.
    for (int f = 0; f < B; ++f)
      for (int t = 0; t < 80; ++t)
        CHECK(masks.sample_s[ks].values()[static_cast<std::size_t>(
                  f * 80 + t)] == masks.frame_s[ks].values()[
                  static_cast<std::size_t>(f)]);
  }

  // Full-band mode emits a single band pair.
  const GeneratorConfig full = toy_config(GeneratorMode::full_band);
  ParamStore fb = make_store(full, 6);
  CHECK(vuv_masks(c, fb, full).bands() == 1);

  // Zeroing the head weights pins every mask at sigmoid(0) = 0.5.
  for (int k = 0; k < 2; ++k)
    for (const char* src : {"g.vuv.d", "g.vuv.s"}) {
      auto& p = store.at(src + std::to_string(k) + ".w");
      std::fill(p.value.begin(), p.value.end(), 0.0);
    }
  MaskSet half = vuv_masks(c, store, cfg);
  for (int k = 0; k < 2; ++k)
    for (double v : half.frame_s[static_cast<std::size_t>(k)].values())
      CHECK(v == 0.5);
}

TEST_CASE("noise offset") {
  // Hand-built mask set: two bands, three frames.
  MaskSet masks;
  for (int k = 0; k < 2; ++k) {
    masks.frame_d.push_back(
        Tensor::from_values({1, 3}, {0.1, 0.2, 0.3}));
    masks.frame_s.push_back(
        Tensor::from_values({1, 3}, {0.5, 0.9, 0.05}));
    masks.sample_d.push_back(repeat_upsample(masks.frame_d.back(), 80));
    masks.sample_s.push_back(repeat_upsample(masks.frame_s.back(), 80));
  }

  SUBCASE("offset and clip arithmetic") {
    MaskSet up = apply_noise_offset(masks, {0.4, {}});
    for (int k = 0; k < 2; ++k) {
      const auto& v = up.frame_s[static_cast<std::size_t>(k)].values();
      CHECK(v[0] == doctest::Approx(0.9));
      CHECK(v[1] == 1.0);  // 0.9 + 0.4 clips at the upper bound
      CHECK(v[2] == doctest::Approx(0.45));
      // Deterministic masks pass through untouched.
      CHECK(up.frame_d[static_cast<std::size_t>(k)].values() ==
            masks.frame_d[static_cast<std::size_t>(k)].values());
    }
    MaskSet plus = apply_noise_offset(masks, {0.2, {}});
    CHECK(plus.frame_s[0].values()[0] == doctest::Approx(0.7));

    MaskSet down = apply_noise_offset(masks, {-1.0, {}});
    for (double v : down.frame_s[0].values()) CHECK(v == 0.0);
  }

  SUBCASE("identity at zero offset") {
    MaskSet same = apply_noise_offset(masks, {0.0, {}});
    for (int k = 0; k < 2; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      CHECK(same.frame_s[ks].values() == masks.frame_s[ks].values());
      CHECK(same.sample_s[ks].values() == masks.sample_s[ks].values());
    }
  }

  SUBCASE("band selection") {
    MaskSet one = apply_noise_offset(masks, {0.2, {1}});
    CHECK(one.frame_s[0].values() == masks.frame_s[0].values());
    CHECK(one.frame_s[1].values()[0] == doctest::Approx(0.7));
    // Sample masks track the shifted frame masks.
    CHECK(one.sample_s[1].values()[0] == doctest::Approx(0.7));
  }

  SUBCASE("validation") {
    CHECK_THROWS_AS(apply_noise_offset(masks, {1.5, {}}), ArgumentError);
    CHECK_THROWS_AS(apply_noise_offset(masks, {-1.0001, {}}), ArgumentError);
    CHECK_THROWS_AS(apply_noise_offset(masks, {0.1, {2}}), ArgumentError);
    CHECK_THROWS_AS(apply_noise_offset(masks, {0.1, {-1}}), ArgumentError);
  }
}

TEST_CASE("excitation assembly") {
  RandomStream rng(11);
  const int T = 160;

  SUBCASE("full band") {
    const GeneratorConfig cfg = toy_config(GeneratorMode::full_band);
    ExcitationSet exc;
    exc.e_d = random_noise(T, rng);
    exc.e_s = random_noise(T, rng);

    MaskSet ones;
    ones.frame_d.push_back(Tensor::from_values({1, 2}, {1.0, 1.0}));
    ones.frame_s.push_back(Tensor::from_values({1, 2}, {1.0, 1.0}));
    ones.sample_d.push_back(repeat_upsample(ones.frame_d[0], 80));
    ones.sample_s.push_back(repeat_upsample(ones.frame_s[0], 80));

    Tensor full = assemble_excitation(exc, ones, nullptr, cfg);
    CHECK(full.channels() == 2);
    CHECK(full.length() == T);
    // Unit masks leave both sources unchanged in their channels.
    for (int t = 0; t < T; ++t) {
      CHECK(full.values()[static_cast<std::size_t>(t)] ==
            exc.e_d.values()[static_cast<std::size_t>(t)]);
      CHECK(full.values()[static_cast<std::size_t>(T + t)] ==
            exc.e_s.values()[static_cast<std::size_t>(t)]);
    }

    MaskSet zeros = ones;
    zeros.frame_d[0] = Tensor::zeros({1, 2});
    zeros.frame_s[0] = Tensor::zeros({1, 2});
    zeros.sample_d[0] = Tensor::zeros({1, T});
    zeros.sample_s[0] = Tensor::zeros({1, T});
    Tensor silent = assemble_excitation(exc, zeros, nullptr, cfg);
    for (double v : silent.values()) CHECK(v == 0.0);
  }

  SUBCASE("multiband") {
    const GeneratorConfig cfg = toy_config(GeneratorMode::multiband, 2);
    const FilterBank bank = make_filter_bank(2);
    ExcitationSet exc;
    exc.e_d = random_noise(T, rng);
    exc.e_s = random_noise(T, rng);

    MaskSet masks;
    for (int k = 0; k < 2; ++k) {
      masks.frame_d.push_back(Tensor::from_values({1, 2}, {0.25, 0.75}));
      masks.frame_s.push_back(Tensor::from_values({1, 2}, {1.0, 0.5}));
      masks.sample_d.push_back(repeat_upsample(masks.frame_d.back(), 80));
      masks.sample_s.push_back(repeat_upsample(masks.frame_s.back(), 80));
    }

    Tensor mixed = assemble_excitation(exc, masks, &bank, cfg);
    CHECK(mixed.channels() == 4);  // filter input width 2M
    CHECK(mixed.length() == T);
    CHECK(exc.subbands_d.channels() == 2);
    CHECK(exc.subbands_s.channels() == 2);

    // Channel k is the masked k-th subband of e_d; channel M+k of e_s.
    const auto sub_d = decompose(exc.e_d.values(), bank);
    for (int k = 0; k < 2; ++k)
      for (int t = 0; t < T; ++t) {
        const double m =
            masks.sample_d[static_cast<std::size_t>(k)].values()
                [static_cast<std::size_t>(t)];
        CHECK(mixed.values()[static_cast<std::size_t>(k * T + t)] ==
              doctest::Approx(m * sub_d[static_cast<std::size_t>(k)]
                                       [static_cast<std::size_t>(t)])
                  .epsilon(1e-12));
      }

    CHECK_THROWS_AS(assemble_excitation(exc, masks, nullptr, cfg),
                    ArgumentError);
    const FilterBank four = make_filter_bank(4);
    CHECK_THROWS_AS(assemble_excitation(exc, masks, &four, cfg),
                    ArgumentError);
    MaskSet narrow;
    narrow.frame_d.push_back(masks.frame_d[0]);
    narrow.frame_s.push_back(masks.frame_s[0]);
    narrow.sample_d.push_back(masks.sample_d[0]);
    narrow.sample_s.push_back(masks.sample_s[0]);
    CHECK_THROWS_AS(assemble_excitation(exc, narrow, &bank, cfg),
                    ArgumentError);
  }
}

TEST_CASE("neural filter") {
  const GeneratorConfig cfg = toy_config(GeneratorMode::full_band);
  ParamStore store = make_store(cfg, 12);
  RandomStream rng(13);
  const int T = 240;

  Tensor cond = Tensor::zeros({8, T});
  Tensor zero_in = Tensor::zeros({2, T});
  Tensor flat = neural_filter(zero_in, cond, store, cfg);
  CHECK(flat.channels() == 1);
  CHECK(flat.length() == T);
  // All-zero excitation and conditioning with zero biases stay at zero.
  for (double v : flat.values()) CHECK(v == 0.0);

  CHECK_THROWS_AS(neural_filter(Tensor::zeros({3, T}), cond, store, cfg),
                  ArgumentError);
  CHECK_THROWS_AS(neural_filter(zero_in, Tensor::zeros({8, T + 1}), store,
                                cfg),
                  ArgumentError);

  // Receptive field: each toy block spans +-(1 + 2 + 4) samples, so two
  // blocks reach +-14. A single-sample change must stay inside that window
  // yet escape the +-6 an undilated stack would give.
  const int p = 120;
  Tensor base = random_noise(T, rng);
  std::vector<double> bumped = base.values();
  bumped[p] += 1.0;
  Tensor cond2 = condition_upsample(random_condition(T / 80, rng), store,
                                    cfg);
  Tensor ya = neural_filter(concat_channels({base, base}), cond2, store, cfg);
  Tensor yb = neural_filter(
      concat_channels({Tensor::signal(bumped), Tensor::signal(bumped)}),
      cond2, store, cfg);
  int lo = T, hi = -1;
  for (int t = 0; t < T; ++t)
    if (ya.values()[static_cast<std::size_t>(t)] !=
        yb.values()[static_cast<std::size_t>(t)]) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  CHECK(lo >= p - 14);
  CHECK(hi <= p + 14);
  CHECK(lo < p - 6);   // dilation actually widens the field
  CHECK(hi > p + 6);
}

TEST_CASE("full generator pipeline") {
  const GeneratorConfig cfg = toy_config(GeneratorMode::multiband, 2);
  const FilterBank bank = make_filter_bank(2);
  ParamStore store = make_store(cfg, 14);
  RandomStream rng(15);

  SUBCASE("lengths and channel counts") {
    for (int B : {1, 7}) {
      Tensor c = random_condition(B, rng);
      Tensor g = random_noise(80 * B, rng);
      GeneratorOutput out =
          generator_forward(c, g, {}, store, cfg, &bank);
      CHECK(out.waveform.channels() == 1);
      CHECK(out.waveform.length() == 80 * B);
      CHECK(out.cond.length() == 80 * B);
      CHECK(out.excitation.e_d.length() == 80 * B);
      CHECK(out.excitation.e_s.length() == 80 * B);
      CHECK(out.excitation_input.channels() == 4);
      CHECK(out.masks.bands() == 2);
    }
  }

  SUBCASE("synthesis determinism and length") {
    MelSpectrogram mel = random_mel(200, 77);
    std::vector<double> w1 = synthesize(mel, 42, {}, store, cfg);
    CHECK(w1.size() == 16000);
    std::vector<double> w2 = synthesize(mel, 42, {}, store, cfg);
    CHECK(w1 == w2);
    std::vector<double> w3 = synthesize(mel, 43, {}, store, cfg);
    CHECK(w1 != w3);
  }

  SUBCASE("zero offset equals a pipeline without noise control") {
    MelSpectrogram mel = random_mel(4, 78);
    std::vector<double> controlled = synthesize(mel, 5, {0.0, {}}, store,
                                                cfg);

    // Same pipeline with the noise-control stage omitted entirely.
    Tensor c = condition_tensor(mel);
    RandomStream noise_rng(5);
    std::vector<double> gv(320);
    for (double& v : gv) v = noise_rng.gaussian();
    Tensor cond = condition_upsample(c, store, cfg, false);
    ExcitationSet exc;
    exc.e_d = deterministic_source(c, store, cfg, false);
    exc.e_s = stochastic_source(Tensor::signal(gv), cond, store, cfg, false);
    MaskSet masks = vuv_masks(c, store, cfg, false);
    Tensor mix = assemble_excitation(exc, masks, &bank, cfg);
    Tensor wave = neural_filter(mix, cond, store, cfg, false);
    CHECK(controlled == wave.values());
  }

  SUBCASE("inference builds no graph") {
    Tensor c = random_condition(2, rng);
    Tensor g = random_noise(160, rng);
    GeneratorOutput out =
        generator_forward(c, g, {}, store, cfg, &bank, false);
    CHECK_FALSE(out.waveform.requires_grad());
    CHECK(graph_op_kinds(out.waveform) == std::vector<std::string>{"conv1d"});
  }
}

TEST_CASE("gradients reach every generator parameter") {
  const GeneratorConfig cfg = toy_config(GeneratorMode::multiband, 2);
  const FilterBank bank = make_filter_bank(2);
  ParamStore store = make_store(cfg, 16);
  RandomStream rng(17);

  const int B = 4, T = 320;
  Tensor c = random_condition(B, rng);
  Tensor g = random_noise(T, rng);
  std::vector<double> target(static_cast<std::size_t>(T));
  for (double& v : target) v = 0.3 * rng.gaussian();

  GeneratorOutput out = generator_forward(c, g, {}, store, cfg, &bank);
  Tensor loss = multires_stft_loss(Tensor::signal(target), out.waveform);
  backward(loss);

  // No dead parameters: every gradient slot of every tensor is touched.
  for (const auto& [name, p] : store.entries()) {
    double min_abs = 1e300;
    for (double v : p.grad) min_abs = std::min(min_abs, std::abs(v));
    INFO("parameter " << name);
    CHECK(min_abs > 0.0);
  }
}

TEST_CASE("generator gradients match finite differences") {
  const GeneratorConfig cfg = toy_config(GeneratorMode::multiband, 2);
  const FilterBank bank = make_filter_bank(2);
  ParamStore store = make_store(cfg, 18);
  RandomStream rng(19);

  const int B = 2, T = 160;
  Tensor c = random_condition(B, rng);
  Tensor g = random_noise(T, rng);
  std::vector<double> target(static_cast<std::size_t>(T));
  for (double& v : target) v = 0.3 * rng.gaussian();
  Tensor ref = Tensor::signal(target);

  auto build = [&](ParamStore& s) {
    GeneratorOutput out = generator_forward(c, g, {0.1, {}}, s, cfg, &bank);
    return mean(square(sub(out.waveform, ref)));
  };
  ndps::test::check_param_gradients(store, build, 2);
}
