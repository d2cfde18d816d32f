#include "ndps/trainer.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "ndps/ops.hpp"

namespace ndps {

void validate_config(const TrainConfig& cfg) {
  if (!(cfg.lr_init > 0.0))
    throw ArgumentError("trainer: lr_init must be positive");
  if (!(cfg.decay > 0.0 && cfg.decay <= 1.0))
    throw ArgumentError("trainer: decay must lie in (0, 1]");
  if (!(cfg.adam_beta1 >= 0.0 && cfg.adam_beta1 < 1.0) ||
      !(cfg.adam_beta2 >= 0.0 && cfg.adam_beta2 < 1.0))
    throw ArgumentError("trainer: Adam betas must lie in [0, 1)");
  if (!(cfg.adam_eps > 0.0))
    throw ArgumentError("trainer: adam_eps must be positive");
  if (cfg.batch < 1) throw ArgumentError("trainer: batch must be >= 1");
  if (cfg.clip_samples < kMelHop || cfg.clip_samples % kMelHop != 0)
    throw ArgumentError("trainer: clip_samples must be a positive multiple "
                        "of 80");
  if (cfg.total_steps < 1)
    throw ArgumentError("trainer: total_steps must be >= 1");
  if (!(cfg.lambda > 0.0))
    throw ArgumentError("trainer: lambda must be positive");
}

double learning_rate(const TrainConfig& cfg, std::int64_t step) {
  std::int64_t k = step / cfg.decay_interval();
  double lr = cfg.lr_init;
  for (std::int64_t i = 0; i < k; ++i) lr *= cfg.decay;
  return lr;
}

void adam_step(ParamStore& store, AdamState& state, const std::string& prefix,
               const TrainConfig& cfg, double lr) {
  state.t += 1;
  const double bc1 =
      1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  const double bc2 =
      1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  for (auto& [name, p] : store.entries()) {
    if (name.rfind(prefix, 0) != 0) continue;
    auto& m = state.m[name];
    auto& v = state.v[name];
    if (m.empty()) m.assign(p.size(), 0.0);
    if (v.empty()) v.assign(p.size(), 0.0);
    if (m.size() != p.size() || v.size() != p.size())
      throw ShapeError("adam_step: moment size mismatch for '" + name + "'");
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
      v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
      p.value[i] -=
          lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
    }
  }
}

TrainerState make_trainer(const GeneratorConfig& gen_cfg,
                          const DiscriminatorConfig& disc_cfg,
                          const TrainConfig& cfg) {
  validate_config(gen_cfg);
  validate_config(disc_cfg);
  validate_config(cfg);
  TrainerState state;
  state.gen_cfg = gen_cfg;
  state.disc_cfg = disc_cfg;
  state.cfg = cfg;
  RandomStream param_rng(cfg.seed);
  init_generator_params(state.store, gen_cfg, param_rng);
  init_discriminator_params(state.store, disc_cfg, param_rng);
  state.data_rng = RandomStream(cfg.seed + 1);
  state.noise_rng = RandomStream(cfg.seed + 2);
  if (gen_cfg.mode == GeneratorMode::multiband)
    state.bank = make_filter_bank(gen_cfg.m_bands);
  return state;
}

std::vector<Clip> sample_batch(TrainerState& state,
                               const std::vector<Utterance>& data) {
  if (data.empty()) throw ArgumentError("sample_batch: no utterances");
  const int clip_frames = state.cfg.clip_samples / kMelHop;
  std::vector<Clip> batch;
  for (int b = 0; b < state.cfg.batch; ++b) {
    const Utterance& u =
        data[static_cast<std::size_t>(state.data_rng.below(data.size()))];
    if (u.mel.frames <= 0 ||
        u.wave.size() !=
            static_cast<std::size_t>(u.mel.frames) * kMelHop)
      throw DataError("sample_batch: utterance waveform length must be "
                      "80 x mel frames");
    if (u.mel.frames <= clip_frames) {
      batch.push_back(u);
      continue;
    }
    const int fo = static_cast<int>(
        state.data_rng.below(static_cast<std::uint64_t>(u.mel.frames -
                                                        clip_frames + 1)));
    Clip c;
    c.mel.frames = clip_frames;
    c.mel.values.assign(
        u.mel.values.begin() +
            static_cast<std::ptrdiff_t>(fo) * kMelBins,
        u.mel.values.begin() +
            static_cast<std::ptrdiff_t>(fo + clip_frames) * kMelBins);
    c.wave.assign(u.wave.begin() + static_cast<std::ptrdiff_t>(fo) * kMelHop,
                  u.wave.begin() +
                      static_cast<std::ptrdiff_t>(fo + clip_frames) *
                          kMelHop);
    batch.push_back(std::move(c));
  }
  return batch;
}

LossReport train_step(TrainerState& state, const std::vector<Clip>& batch) {
  if (batch.empty()) throw ArgumentError("train_step: empty batch");
  const double lr = learning_rate(state.cfg, state.step);
  const bool warm = state.step < state.cfg.resolved_warmup();
  const FilterBank* bank =
      state.gen_cfg.mode == GeneratorMode::multiband ? &state.bank : nullptr;
  const double inv_batch = 1.0 / static_cast<double>(batch.size());

  struct Prepared {
    Tensor cond, target, noise;
  };
  std::vector<Prepared> prep;
  for (const Clip& clip : batch) {
    if (clip.mel.frames <= 0 ||
        clip.wave.size() !=
            static_cast<std::size_t>(clip.mel.frames) * kMelHop)
      throw DataError("train_step: clip waveform length must be 80 x mel "
                      "frames");
    // Noise is drawn up front and shared by both passes, so the
    // discriminator trains against exactly the samples the generator
    // update then works on, and the draw count per step is fixed.
    std::vector<double> nv(clip.wave.size());
    for (double& v : nv) v = state.noise_rng.gaussian();
    prep.push_back({condition_tensor(clip.mel), Tensor::signal(clip.wave),
                    Tensor::signal(nv)});
  }

  if (!warm) {
    Tensor d_loss;
    for (const Prepared& p : prep) {
      GeneratorOutput out = generator_forward(
          p.cond, p.noise, {}, state.store, state.gen_cfg, bank,
          /*with_grad=*/false);
      Tensor fake = Tensor::signal(out.waveform.values());  // detached
      Tensor term =
          discriminator_loss(p.target, fake, state.store, state.disc_cfg);
      d_loss = d_loss.defined() ? add(d_loss, term) : term;
    }
    state.store.zero_grad();
    backward(scale(d_loss, inv_batch));
    adam_step(state.store, state.adam_d, "d.", state.cfg, lr);
  }

  LossReport totals;
  Tensor stft_sum, adv_sum;
  for (const Prepared& p : prep) {
    GeneratorOutput out = generator_forward(p.cond, p.noise, {}, state.store,
                                            state.gen_cfg, bank);
    LossReport r;
    Tensor l_stft = multires_stft_loss(p.target, out.waveform, &r);
    totals.l_sc += r.l_sc * inv_batch;
    totals.l_mag += r.l_mag * inv_batch;
    totals.l_stft += r.l_stft * inv_batch;
    stft_sum = stft_sum.defined() ? add(stft_sum, l_stft) : l_stft;
    if (!warm) {
      // Discriminator leaves are fetched without gradient so the term
      // trains the generator only.
      Tensor l_adv = adversarial_loss_g(out.waveform, state.store,
                                        state.disc_cfg, /*with_grad=*/false);
      totals.l_adv += l_adv.value() * inv_batch;
      adv_sum = adv_sum.defined() ? add(adv_sum, l_adv) : l_adv;
    }
  }
  Tensor g_loss = scale(stft_sum, inv_batch);
  if (!warm)
    g_loss =
        combined_loss(g_loss, scale(adv_sum, inv_batch), state.cfg.lambda);
  state.store.zero_grad();
  backward(g_loss);
  adam_step(state.store, state.adam_g, "g.", state.cfg, lr);

  totals.l_comb = totals.l_stft + state.cfg.lambda * totals.l_adv;
  state.step += 1;
  return totals;
}

void write_log_header(std::ostream& os) {
  os << "step\tlr\tl_sc\tl_mag\tl_stft\tl_adv\tl_comb\n";
}

void write_log_row(std::ostream& os, std::int64_t step, double lr,
                   const LossReport& report) {
  os << step << '\t' << std::setprecision(10) << lr << '\t' << report.l_sc
     << '\t' << report.l_mag << '\t' << report.l_stft << '\t' << report.l_adv
     << '\t' << report.l_comb << '\n';
}

// --- checkpoint serialization ----------------------------------------------

namespace {

constexpr char kMagic[4] = {'N', 'D', 'P', 'S'};

class Writer {
 public:
  explicit Writer(const std::string& path)
      : os_(path, std::ios::binary | std::ios::trunc) {
    if (!os_) throw ArgumentError("cannot open '" + path + "' for writing");
  }

  void bytes(const void* p, std::size_t n) {
    os_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u32(std::uint32_t x) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = (x >> (8 * i)) & 0xff;  // little end
    bytes(b, 4);
  }
  void i32(std::int32_t x) { u32(static_cast<std::uint32_t>(x)); }
  void u64(std::uint64_t x) {
    u32(static_cast<std::uint32_t>(x & 0xffffffffu));
    u32(static_cast<std::uint32_t>(x >> 32));
  }
  void i64(std::int64_t x) { u64(static_cast<std::uint64_t>(x)); }
  void f64(double x) { u64(std::bit_cast<std::uint64_t>(x)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f64_array(const std::vector<double>& v) {
    for (double x : v) f64(x);
  }

  void finish() {
    os_.flush();
    if (!os_) throw ArgumentError("checkpoint write failed");
  }

 private:
  std::ofstream os_;
};

class Reader {
 public:
  explicit Reader(const std::string& path)
      : is_(path, std::ios::binary) {
    if (!is_) throw ArgumentError("cannot open '" + path + "' for reading");
  }

  std::size_t offset() const { return offset_; }

  void bytes(void* p, std::size_t n) {
    is_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is_.gcount()) != n)
      throw IntegrityError("checkpoint truncated", offset_);
    offset_ += n;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    std::uint32_t x = 0;
    for (int i = 0; i < 4; ++i) x |= std::uint32_t(b[i]) << (8 * i);
    return x;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    return lo | (static_cast<std::uint64_t>(u32()) << 32);
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    const std::size_t at = offset_;
    const std::uint32_t n = u32();
    if (n > (1u << 24)) throw IntegrityError("implausible string length", at);
    std::string s(n, '\0');
    if (n > 0) bytes(s.data(), n);
    return s;
  }
  std::vector<double> f64_array(std::size_t n) {
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  bool at_end() {
    is_.peek();
    return is_.eof();
  }

 private:
  std::ifstream is_;
  std::size_t offset_ = 0;
};

void write_moments(Writer& w, const AdamState& state) {
  w.i64(state.t);
  w.u32(static_cast<std::uint32_t>(state.m.size()));
  for (const auto& [name, m] : state.m) {
    const auto it = state.v.find(name);
    const std::vector<double>& v =
        it == state.v.end() ? std::vector<double>{} : it->second;
    w.str(name);
    w.u32(static_cast<std::uint32_t>(m.size()));
    w.f64_array(m);
    if (v.size() != m.size())
      throw ArgumentError("checkpoint: moment vectors out of sync");
    w.f64_array(v);
  }
}

AdamState read_moments(Reader& r) {
  AdamState state;
  state.t = r.i64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::string name = r.str();
    const std::size_t at = r.offset();
    const std::uint32_t size = r.u32();
    if (size > (1u << 28))
      throw IntegrityError("implausible moment size", at);
    state.m[name] = r.f64_array(size);
    state.v[name] = r.f64_array(size);
  }
  return state;
}

}  // namespace

Checkpoint snapshot(const TrainerState& state) {
  Checkpoint ck;
  ck.gen_cfg = state.gen_cfg;
  ck.params = state.store;
  ck.adam_g = state.adam_g;
  ck.adam_d = state.adam_d;
  ck.step = state.step;
  ck.data_rng_state = state.data_rng.serialize();
  ck.noise_rng_state = state.noise_rng.serialize();
  return ck;
}

void restore(TrainerState& state, const Checkpoint& ck) {
  state.gen_cfg = ck.gen_cfg;
  state.store = ck.params;
  state.adam_g = ck.adam_g;
  state.adam_d = ck.adam_d;
  state.step = ck.step;
  state.data_rng.deserialize(ck.data_rng_state);
  state.noise_rng.deserialize(ck.noise_rng_state);
  if (ck.gen_cfg.mode == GeneratorMode::multiband)
    state.bank = make_filter_bank(ck.gen_cfg.m_bands);
}

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(ck.version);
  const GeneratorConfig& g = ck.gen_cfg;
  w.u32(g.mode == GeneratorMode::full_band ? 0u : 1u);
  w.i32(g.m_bands);
  w.i32(g.gate_channels);
  w.i32(g.residual_channels);
  w.i32(g.skip_channels);
  w.u32(static_cast<std::uint32_t>(g.upsample_rates.size()));
  for (int r : g.upsample_rates) w.i32(r);
  w.i32(g.det_stages);
  w.i32(g.sto_blocks);
  w.i32(g.filt_blocks);
  w.i32(g.kernel_size);
  w.i64(ck.step);
  w.str(ck.data_rng_state);
  w.str(ck.noise_rng_state);
  w.u32(static_cast<std::uint32_t>(ck.params.entries().size()));
  for (const auto& [name, p] : ck.params.entries()) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(p.dims.size()));
    for (int d : p.dims) w.i32(d);
    w.f64_array(p.value);
  }
  write_moments(w, ck.adam_g);
  write_moments(w, ck.adam_d);
  w.finish();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (magic[0] != 'N' || magic[1] != 'D' || magic[2] != 'P' ||
      magic[3] != 'S')
    throw IntegrityError("bad checkpoint magic", 0);
  Checkpoint ck;
  ck.version = r.u32();
  if (ck.version != kCheckpointVersion)
    throw IntegrityError("unsupported checkpoint version", 4);
  GeneratorConfig& g = ck.gen_cfg;
  const std::uint32_t mode = r.u32();
  if (mode > 1) throw IntegrityError("bad generator mode", r.offset() - 4);
  g.mode = mode == 0 ? GeneratorMode::full_band : GeneratorMode::multiband;
  g.m_bands = r.i32();
  g.gate_channels = r.i32();
  g.residual_channels = r.i32();
  g.skip_channels = r.i32();
  {
    const std::size_t at = r.offset();
    const std::uint32_t n = r.u32();
    if (n == 0 || n > 64)
      throw IntegrityError("implausible upsample stage count", at);
    g.upsample_rates.clear();
    for (std::uint32_t i = 0; i < n; ++i)
      g.upsample_rates.push_back(r.i32());
  }
  g.det_stages = r.i32();
  g.sto_blocks = r.i32();
  g.filt_blocks = r.i32();
  g.kernel_size = r.i32();
  ck.step = r.i64();
  ck.data_rng_state = r.str();
  ck.noise_rng_state = r.str();
  const std::uint32_t n_params = r.u32();
  for (std::uint32_t i = 0; i < n_params; ++i) {
    const std::string name = r.str();
    const std::size_t at = r.offset();
    const std::uint32_t ndim = r.u32();
    if (ndim == 0 || ndim > 8)
      throw IntegrityError("implausible tensor rank", at);
    std::vector<int> dims;
    std::size_t size = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      const int dim = r.i32();
      if (dim <= 0 || dim > (1 << 24))
        throw IntegrityError("implausible tensor dimension", r.offset() - 4);
      dims.push_back(dim);
      size *= static_cast<std::size_t>(dim);
    }
    try {
      Parameter& p = ck.params.create(name, dims);
      p.value = r.f64_array(size);
    } catch (const ArgumentError&) {
      throw IntegrityError("duplicate tensor record", at);
    }
  }
  ck.adam_g = read_moments(r);
  ck.adam_d = read_moments(r);
  if (!r.at_end())
    throw IntegrityError("trailing bytes after checkpoint", r.offset());
  return ck;
}

}  // namespace ndps
