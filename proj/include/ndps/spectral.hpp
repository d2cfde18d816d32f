#ifndef NDPS_SPECTRAL_HPP
#define NDPS_SPECTRAL_HPP

#include <string>
#include <vector>

#include "ndps/tensor.hpp"

namespace ndps {

// STFT analysis parameters. The window is always Hann (periodic form).
struct StftConfig {
  int fft_size = 0;
  int hop = 0;         // frame shift FS
  int win_length = 0;  // frame length FL
};

// Magnitude floor used inside the log-magnitude loss.
inline constexpr double kLogFloor = 1e-7;

// Mel front-end constants: 80 log-mel bins at 16 kHz, 5 ms hop, 50 ms
// window, 1024-point transform, natural log with floor 1e-5.
inline constexpr int kMelBins = 80;
inline constexpr int kMelHop = 80;
inline constexpr int kMelWin = 800;
inline constexpr int kMelFft = 1024;
inline constexpr double kMelFloor = 1e-5;
inline constexpr int kSampleRate = 16000;

// Plain (non-differentiable) magnitude spectrogram, row-major frames x bins.
struct Spectrogram {
  int frames = 0;
  int bins = 0;
  std::vector<double> values;

  double at(int f, int b) const {
    return values[static_cast<std::size_t>(f) * bins + b];
  }
};

// Log-mel conditioning features, row-major frames x 80.
struct MelSpectrogram {
  int frames = 0;
  std::vector<double> values;

  double at(int f, int b) const {
    return values[static_cast<std::size_t>(f) * kMelBins + b];
  }
};

// All loss components of one training step.
struct LossReport {
  double l_sc = 0.0;
  double l_mag = 0.0;
  double l_stft = 0.0;
  double l_adv = 0.0;
  double l_comb = 0.0;
};

// STFT magnitudes of a mono signal. The signal is reflect-padded by
// win_length/2 on both ends, so the frame count is floor(T/hop) + 1 and the
// bin count fft_size/2 + 1. Frames shorter inputs permissively: only an
// input too short to yield one frame after padding is an error.
Spectrogram stft_magnitude(const std::vector<double>& x,
                           const StftConfig& cfg);

// Differentiable variant for a [1 x T] tensor; output is [frames x bins].
Tensor stft_magnitude(const Tensor& x, const StftConfig& cfg);

// 80-bin log-mel features for conditioning. Frame count B = ceil(T/hop), so
// B*80 = T exactly for hop-aligned inputs (the synthesis contract).
MelSpectrogram mel_features(const std::vector<double>& x, int sample_rate);

// Conditioning tensor [80 x B] from a mel spectrogram (transposed layout).
Tensor condition_tensor(const MelSpectrogram& mel);

// Spectral convergence ||S - S_hat||_F / ||S||_F. The reference magnitudes
// must not be identically zero.
Tensor spectral_convergence(const Tensor& ref, const Tensor& pred,
                            const StftConfig& cfg);
double spectral_convergence(const std::vector<double>& ref,
                            const std::vector<double>& pred,
                            const StftConfig& cfg);

// Mean L1 distance of floored log magnitudes.
Tensor log_stft_magnitude(const Tensor& ref, const Tensor& pred,
                          const StftConfig& cfg);
double log_stft_magnitude(const std::vector<double>& ref,
                          const std::vector<double>& pred,
                          const StftConfig& cfg);

// The three fixed analysis configurations of the multi-resolution loss,
// (FL, FS, FN) = (320, 80, 512), (640, 160, 1024), (1960, 256, 2048).
const std::vector<StftConfig>& multires_configs();

// Mean over the three configurations of (L_sc + L_mag). Differentiable
// w.r.t. pred; fills l_sc / l_mag / l_stft of *report when given (each as the
// mean of its per-configuration values).
Tensor multires_stft_loss(const Tensor& ref, const Tensor& pred,
                          LossReport* report = nullptr);

// Feature file I/O: "NDPF" magic, little-endian u32 frame count, then
// frames x 80 float32 values row-major.
void write_feature_file(const std::string& path, const MelSpectrogram& mel);
MelSpectrogram read_feature_file(const std::string& path);

}  // namespace ndps

#endif  // NDPS_SPECTRAL_HPP
