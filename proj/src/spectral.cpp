#include "ndps/spectral.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>

#include "ndps/ops.hpp"

namespace ndps {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Process-lifetime FFTW plan cache. Plan creation is not thread-safe, so it
// is mutex-guarded; execution on per-call buffers via the new-array API is.
class FftEngine {
 public:
  static FftEngine& instance() {
    static FftEngine engine;
    return engine;
  }

  // out has n/2+1 (re, im) pairs.
  void rfft(int n, double* in, fftw_complex* out) {
    fftw_execute_dft_r2c(forward_plan(n), in, out);
  }

  // Unnormalized Hermitian-input inverse: out[j] = sum_k X_k e^{+2pi i kj/n}
  // over the full two-sided spectrum implied by the one-sided input.
  // Destroys `in`.
  void irfft(int n, fftw_complex* in, double* out) {
    fftw_execute_dft_c2r(backward_plan(n), in, out);
  }

 private:
  fftw_plan forward_plan(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = fwd_.find(n);
    if (it != fwd_.end()) return it->second;
    std::vector<double> rbuf(static_cast<std::size_t>(n));
    std::vector<fftw_complex> cbuf(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan p = fftw_plan_dft_r2c_1d(n, rbuf.data(), cbuf.data(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    fwd_[n] = p;
    return p;
  }

  fftw_plan backward_plan(int n) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = bwd_.find(n);
    if (it != bwd_.end()) return it->second;
    std::vector<double> rbuf(static_cast<std::size_t>(n));
    std::vector<fftw_complex> cbuf(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan p = fftw_plan_dft_c2r_1d(n, cbuf.data(), rbuf.data(),
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd_[n] = p;
    return p;
  }

  std::mutex mu_;
  std::map<int, fftw_plan> fwd_, bwd_;
};

void validate_config(const StftConfig& cfg) {
  if (cfg.fft_size < 1 || cfg.hop < 1 || cfg.win_length < 1)
    throw ArgumentError("stft: all config fields must be positive");
  if (cfg.win_length > cfg.fft_size)
    throw ArgumentError("stft: win_length exceeds fft_size");
  if (cfg.hop > cfg.win_length)
    throw ArgumentError("stft: hop exceeds win_length");
}

// Reflective boundary index (no edge repetition): ... x2 x1 | x0 x1 ... .
int mirror(int idx, int n) {
  if (n == 1) return 0;
  const int period = 2 * n - 2;
  idx = ((idx % period) + period) % period;
  return idx < n ? idx : period - idx;
}

std::vector<double> hann_window(int length) {
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n)
    w[static_cast<std::size_t>(n)] =
        0.5 - 0.5 * std::cos(2.0 * kPi * n / length);
  return w;
}

struct StftFrames {
  int frames = 0;
  int bins = 0;
  std::vector<double> mag;        // frames x bins
  std::vector<double> ure, uim;   // unit phasors X/|X|, frames x bins
};

StftFrames stft_core(const double* x, int T, const StftConfig& cfg,
                     bool want_phase) {
  validate_config(cfg);
  const int pad = cfg.win_length / 2;
  const int padded = T + 2 * pad;
  if (padded < cfg.win_length)
    throw ArgumentError("stft: input shorter than one frame after padding");
  StftFrames out;
  out.frames = (padded - cfg.win_length) / cfg.hop + 1;
  out.bins = cfg.fft_size / 2 + 1;
  const std::size_t total =
      static_cast<std::size_t>(out.frames) * out.bins;
  out.mag.assign(total, 0.0);
  if (want_phase) {
    out.ure.assign(total, 0.0);
    out.uim.assign(total, 0.0);
  }
  const std::vector<double> win = hann_window(cfg.win_length);
  std::vector<double> buf(static_cast<std::size_t>(cfg.fft_size), 0.0);
  std::vector<fftw_complex> spec(static_cast<std::size_t>(out.bins));
  for (int f = 0; f < out.frames; ++f) {
    const int start = f * cfg.hop - pad;
    for (int n = 0; n < cfg.win_length; ++n)
      buf[static_cast<std::size_t>(n)] =
          x[mirror(start + n, T)] * win[static_cast<std::size_t>(n)];
    std::fill(buf.begin() + cfg.win_length, buf.end(), 0.0);
    FftEngine::instance().rfft(cfg.fft_size, buf.data(), spec.data());
    double* mrow = out.mag.data() + static_cast<std::size_t>(f) * out.bins;
    for (int k = 0; k < out.bins; ++k) {
      const double re = spec[static_cast<std::size_t>(k)][0];
      const double im = spec[static_cast<std::size_t>(k)][1];
      const double m = std::hypot(re, im);
      mrow[k] = m;
      if (want_phase && m > 0.0) {
        out.ure[static_cast<std::size_t>(f) * out.bins + k] = re / m;
        out.uim[static_cast<std::size_t>(f) * out.bins + k] = im / m;
      }
    }
  }
  return out;
}

}  // namespace

Spectrogram stft_magnitude(const std::vector<double>& x,
                           const StftConfig& cfg) {
  if (x.empty()) throw ArgumentError("stft: empty input");
  StftFrames fr = stft_core(x.data(), static_cast<int>(x.size()), cfg, false);
  Spectrogram s;
  s.frames = fr.frames;
  s.bins = fr.bins;
  s.values = std::move(fr.mag);
  return s;
}

Tensor stft_magnitude(const Tensor& x, const StftConfig& cfg) {
  if (x.ndim() != 2 || x.channels() != 1)
    throw ShapeError("stft: input must be a [1 x T] signal");
  const int T = x.length();
  const bool rg = x.requires_grad();
  StftFrames fr = stft_core(x.node()->val.data(), T, cfg, rg);

  auto node = std::make_shared<detail::Node>();
  node->op = "stft_mag";
  node->dims = {fr.frames, fr.bins};
  node->val = std::move(fr.mag);
  if (rg) {
    node->requires_grad = true;
    node->parents = {x.node()};
    auto ure = std::make_shared<std::vector<double>>(std::move(fr.ure));
    auto uim = std::make_shared<std::vector<double>>(std::move(fr.uim));
    const int frames = fr.frames, bins = fr.bins;
    node->backprop = [cfg, T, frames, bins, ure, uim](detail::Node& n) {
      detail::Node& xn = *n.parents[0];
      if (!xn.requires_grad) return;
      xn.ensure_grad();
      const int N = cfg.fft_size;
      const int pad = cfg.win_length / 2;
      const std::vector<double> win = hann_window(cfg.win_length);
      std::vector<double> gpad(static_cast<std::size_t>(T + 2 * pad), 0.0);
      std::vector<fftw_complex> c(static_cast<std::size_t>(bins));
      std::vector<double> tmp(static_cast<std::size_t>(N));
      const bool even = N % 2 == 0;
      for (int f = 0; f < frames; ++f) {
        const std::size_t row = static_cast<std::size_t>(f) * bins;
        for (int k = 0; k < bins; ++k) {
          // d|X_k|/dx contributes Re(u_k e^{+i 2pi k n/N}); the inverse
          // transform sums the two-sided spectrum, so interior bins (which
          // the loss counts once but the Hermitian extension twice) are
          // halved.
          const bool interior = k > 0 && !(even && k == N / 2);
          const double w = interior ? 0.5 : 1.0;
          const double g = n.grad[row + k] * w;
          c[static_cast<std::size_t>(k)][0] = g * (*ure)[row + k];
          c[static_cast<std::size_t>(k)][1] = g * (*uim)[row + k];
        }
        FftEngine::instance().irfft(N, c.data(), tmp.data());
        const int start = f * cfg.hop;
        for (int m = 0; m < cfg.win_length; ++m)
          gpad[static_cast<std::size_t>(start + m)] +=
              tmp[static_cast<std::size_t>(m)] * win[static_cast<std::size_t>(m)];
      }
      // Adjoint of the reflective padding.
      for (int j = 0; j < static_cast<int>(gpad.size()); ++j)
        xn.grad[static_cast<std::size_t>(mirror(j - pad, T))] +=
            gpad[static_cast<std::size_t>(j)];
    };
  }
  return Tensor(std::move(node));
}

namespace {

// Triangular mel filter weights, [kMelBins x (kMelFft/2 + 1)], HTK mel
// mapping, built once.
const std::vector<double>& mel_weights() {
  static const std::vector<double> weights = [] {
    const int bins = kMelFft / 2 + 1;
    auto hz_to_mel = [](double f) {
      return 2595.0 * std::log10(1.0 + f / 700.0);
    };
    auto mel_to_hz = [](double m) {
      return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
    };
    const double mel_hi = hz_to_mel(kSampleRate / 2.0);
    std::vector<double> edges(kMelBins + 2);
    for (int i = 0; i < kMelBins + 2; ++i)
      edges[static_cast<std::size_t>(i)] =
          mel_to_hz(mel_hi * i / (kMelBins + 1));
    std::vector<double> w(static_cast<std::size_t>(kMelBins) * bins, 0.0);
    for (int b = 0; b < kMelBins; ++b) {
      const double lo = edges[static_cast<std::size_t>(b)];
      const double mid = edges[static_cast<std::size_t>(b) + 1];
      const double hi = edges[static_cast<std::size_t>(b) + 2];
      for (int k = 0; k < bins; ++k) {
        const double f = static_cast<double>(k) * kSampleRate / kMelFft;
        double v = 0.0;
        if (f > lo && f < hi)
          v = f <= mid ? (f - lo) / (mid - lo) : (hi - f) / (hi - mid);
        w[static_cast<std::size_t>(b) * bins + k] = v;
      }
    }
    return w;
  }();
  return weights;
}

}  // namespace

MelSpectrogram mel_features(const std::vector<double>& x, int sample_rate) {
  if (sample_rate != kSampleRate)
    throw ArgumentError("mel_features: expected 16 kHz input, got " +
                        std::to_string(sample_rate) + " Hz");
  if (x.empty()) throw ArgumentError("mel_features: empty input");
  const StftConfig cfg{kMelFft, kMelHop, kMelWin};
  Spectrogram s = stft_magnitude(x, cfg);
  const int T = static_cast<int>(x.size());
  // B = ceil(T/hop) keeps 80*B covering T with at most one partial frame; the
  // padded STFT always yields at least that many frames.
  const int B = (T + kMelHop - 1) / kMelHop;
  MelSpectrogram mel;
  mel.frames = B;
  mel.values.assign(static_cast<std::size_t>(B) * kMelBins, 0.0);
  const std::vector<double>& w = mel_weights();
  for (int f = 0; f < B; ++f)
    for (int b = 0; b < kMelBins; ++b) {
      double acc = 0.0;
      const double* wrow = w.data() + static_cast<std::size_t>(b) * s.bins;
      const double* srow =
          s.values.data() + static_cast<std::size_t>(f) * s.bins;
      for (int k = 0; k < s.bins; ++k) acc += wrow[k] * srow[k];
      mel.values[static_cast<std::size_t>(f) * kMelBins + b] =
          std::log(std::max(acc, kMelFloor));
    }
  return mel;
}

Tensor condition_tensor(const MelSpectrogram& mel) {
  if (mel.frames < 1) throw ArgumentError("condition_tensor: empty features");
  std::vector<double> v(static_cast<std::size_t>(kMelBins) * mel.frames);
  for (int b = 0; b < kMelBins; ++b)
    for (int f = 0; f < mel.frames; ++f)
      v[static_cast<std::size_t>(b) * mel.frames + f] = mel.at(f, b);
  return Tensor::from_values({kMelBins, mel.frames}, std::move(v));
}

namespace {

double frobenius(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

}  // namespace

Tensor spectral_convergence(const Tensor& ref, const Tensor& pred,
                            const StftConfig& cfg) {
  if (ref.dims() != pred.dims())
    throw ShapeError("spectral_convergence: length mismatch");
  // The reference is a constant of the loss; never differentiate through it.
  Tensor r = ref.requires_grad() ? detach(ref) : ref;
  Tensor s_ref = stft_magnitude(r, cfg);
  Tensor s_pred = stft_magnitude(pred, cfg);
  const double denom = frobenius(s_ref.values());
  if (denom == 0.0)
    throw ArgumentError("spectral_convergence: reference is all-zero");
  return scale(sqrt(sum(square(sub(s_ref, s_pred)))), 1.0 / denom);
}

double spectral_convergence(const std::vector<double>& ref,
                            const std::vector<double>& pred,
                            const StftConfig& cfg) {
  return spectral_convergence(Tensor::signal(ref), Tensor::signal(pred), cfg)
      .value();
}

Tensor log_stft_magnitude(const Tensor& ref, const Tensor& pred,
                          const StftConfig& cfg) {
  if (ref.dims() != pred.dims())
    throw ShapeError("log_stft_magnitude: length mismatch");
  Tensor r = ref.requires_grad() ? detach(ref) : ref;
  Tensor s_ref = log_floor(stft_magnitude(r, cfg), kLogFloor);
  Tensor s_pred = log_floor(stft_magnitude(pred, cfg), kLogFloor);
  return mean(abs(sub(s_ref, s_pred)));
}

double log_stft_magnitude(const std::vector<double>& ref,
                          const std::vector<double>& pred,
                          const StftConfig& cfg) {
  return log_stft_magnitude(Tensor::signal(ref), Tensor::signal(pred), cfg)
      .value();
}

const std::vector<StftConfig>& multires_configs() {
  // (FL, FS, FN) triples; note the third window length is 1960, not 2048.
  static const std::vector<StftConfig> configs = {
      {512, 80, 320}, {1024, 160, 640}, {2048, 256, 1960}};
  return configs;
}

Tensor multires_stft_loss(const Tensor& ref, const Tensor& pred,
                          LossReport* report) {
  if (ref.dims() != pred.dims())
    throw ShapeError("multires_stft_loss: length mismatch");
  Tensor acc;
  double sc_sum = 0.0, mag_sum = 0.0;
  for (const StftConfig& cfg : multires_configs()) {
    Tensor l_sc = spectral_convergence(ref, pred, cfg);
    Tensor l_mag = log_stft_magnitude(ref, pred, cfg);
    sc_sum += l_sc.value();
    mag_sum += l_mag.value();
    Tensor term = add(l_sc, l_mag);
    acc = acc.defined() ? add(acc, term) : term;
  }
  const double inv = 1.0 / static_cast<double>(multires_configs().size());
  Tensor loss = scale(acc, inv);
  if (report) {
    report->l_sc = sc_sum * inv;
    report->l_mag = mag_sum * inv;
    report->l_stft = loss.value();
  }
  return loss;
}

void write_feature_file(const std::string& path, const MelSpectrogram& mel) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open feature file for writing: " + path);
  out.write("NDPF", 4);
  const std::uint32_t frames = static_cast<std::uint32_t>(mel.frames);
  out.write(reinterpret_cast<const char*>(&frames), 4);
  std::vector<float> row(static_cast<std::size_t>(mel.frames) * kMelBins);
  for (std::size_t i = 0; i < row.size(); ++i)
    row[i] = static_cast<float>(mel.values[i]);
  out.write(reinterpret_cast<const char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
  if (!out) throw FormatError("short write to feature file: " + path);
}

MelSpectrogram read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "NDPF", 4) != 0)
    throw FormatError("bad feature file magic: " + path);
  std::uint32_t frames = 0;
  in.read(reinterpret_cast<char*>(&frames), 4);
  if (!in) throw FormatError("truncated feature file header: " + path);
  MelSpectrogram mel;
  mel.frames = static_cast<int>(frames);
  std::vector<float> raw(static_cast<std::size_t>(frames) * kMelBins);
  in.read(reinterpret_cast<char*>(raw.data()),
          static_cast<std::streamsize>(raw.size() * sizeof(float)));
  if (!in) throw FormatError("truncated feature data: " + path);
  mel.values.assign(raw.begin(), raw.end());
  return mel;
}

}  // namespace ndps
