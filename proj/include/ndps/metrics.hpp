#ifndef NDPS_METRICS_HPP
#define NDPS_METRICS_HPP

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ndps/generator.hpp"
#include "ndps/spectral.hpp"

namespace ndps {

// Frame-level pitch track at hop 80: f0 in Hz with 0 on unvoiced frames
// (f0 > 0 exactly when the voicing flag is set).
struct F0Track {
  std::vector<double> f0;
  std::vector<bool> voiced;
};

// The five objective scores for one reference/synthesis pair.
struct MetricValues {
  double snr_db = 0.0;
  double las_rmse_db = 0.0;
  double mcd_db = 0.0;
  double f0_rmse_cent = 0.0;
  double vuv_error_pct = 0.0;
};

struct UtteranceMetrics {
  std::string id;
  MetricValues values;
};

// Per-utterance scores plus their corpus means.
struct MetricReport {
  std::vector<UtteranceMetrics> utterances;
  MetricValues mean;
};

inline constexpr int kMetricFrame = 400;  // SNR / pitch analysis window
inline constexpr int kMetricHop = 80;
inline constexpr int kSnrMaxShift = 200;
inline constexpr double kSnrCapDb = 100.0;
inline constexpr int kMcdOrder = 24;
inline constexpr double kF0Min = 60.0;
inline constexpr double kF0Max = 400.0;
inline constexpr double kVoicingThreshold = 0.3;
inline constexpr double kEnergyGate = 1e-8;  // mean-square silence cutoff

// Frame-aligned SNR in dB over 400-sample windows at hop 80. Per frame the
// synthesized window is slid within +-200 samples to the best normalized
// correlation before the error is taken; per-frame values are capped at
// 100 dB and silent reference frames are skipped. Throws DataError when no
// frame survives.
double snr(const std::vector<double>& ref, const std::vector<double>& pred);

// RMSE between the floored log10 amplitude spectra (1024-point FFT,
// 800-sample window, 80-sample hop, floor 1e-7).
double las_rmse(const std::vector<double>& ref,
                const std::vector<double>& pred);

// Mel-cepstra c0..c24 per frame: DCT-II (scaled by sqrt(2/80)) of the
// 80-bin log-mel spectrum from the shared mel front-end.
std::vector<std::vector<double>> mel_cepstra(const std::vector<double>& x);

// (10/ln10) * sqrt(2 * sum_{i=1..24} d_i^2) averaged over frames; c0 is
// excluded by convention.
double mcd_from_cepstra(const std::vector<std::vector<double>>& ref,
                        const std::vector<std::vector<double>>& pred);
double mcd(const std::vector<double>& ref, const std::vector<double>& pred);

// Normalized-autocorrelation pitch tracker, search range 60-400 Hz,
// 400-sample frames at hop 80, voicing by correlation threshold 0.3 plus
// an energy gate. Inputs shorter than one frame yield an empty track.
F0Track extract_f0(const std::vector<double>& x);

// RMSE of 1200 * log2(pred / ref) over frames voiced in both tracks.
// Throws DataError when no frame is voiced in both.
double f0_rmse_cents(const F0Track& ref, const F0Track& pred);

// Percentage of frames whose voicing flags disagree.
double vuv_error(const F0Track& ref, const F0Track& pred);

// All five metrics for one pair. A pair with no co-voiced frames reports
// 0 cents; the V/UV score carries the voicing disagreement in that case.
MetricValues evaluate_pair(const std::vector<double>& ref,
                           const std::vector<double>& pred);

// Scores every pair and fills the per-field corpus means.
MetricReport evaluate_corpus(const std::vector<std::string>& ids,
                             const std::vector<std::vector<double>>& ref,
                             const std::vector<std::vector<double>>& pred);

// Tab-separated report: header, one row per utterance, one final mean row.
void write_metric_report(std::ostream& os, const MetricReport& report);

// Wall-clock synthesis time divided by synthesized audio duration, single
// threaded. Reported, never asserted: the value is hardware-bound.
double measure_rtf(ParamStore& store, const GeneratorConfig& cfg,
                   const std::vector<MelSpectrogram>& corpus,
                   std::uint64_t seed = 0);

}  // namespace ndps

#endif  // NDPS_METRICS_HPP
