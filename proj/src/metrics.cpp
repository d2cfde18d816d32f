#include "ndps/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>

namespace ndps {

namespace {

constexpr double kPi = 3.14159265358979323846;

int frame_count(std::size_t samples) {
  const std::size_t frame = kMetricFrame;
  return samples < frame
             ? 0
             : static_cast<int>((samples - frame) / kMetricHop) + 1;
}

}  // namespace

double snr(const std::vector<double>& ref, const std::vector<double>& pred) {
  if (ref.size() != pred.size())
    throw ShapeError("snr: signals must have equal length");
  const int T = static_cast<int>(ref.size());
  double sum = 0.0;
  int count = 0;
  for (int s = 0; s + kMetricFrame <= T; s += kMetricHop) {
    const double* o = ref.data() + s;
    double ref_energy = 0.0;
    for (int i = 0; i < kMetricFrame; ++i) ref_energy += o[i] * o[i];
    if (ref_energy == 0.0) continue;  // silent reference frame

    // Best alignment of the synthesized window by normalized correlation;
    // ties go to the smaller |shift|. Shift 0 is always in bounds.
    int best_shift = 0;
    double best_r = -std::numeric_limits<double>::infinity();
    for (int d = -kSnrMaxShift; d <= kSnrMaxShift; ++d) {
      if (s + d < 0 || s + d + kMetricFrame > T) continue;
      const double* h = pred.data() + s + d;
      double dot = 0.0, energy = 0.0;
      for (int i = 0; i < kMetricFrame; ++i) {
        dot += o[i] * h[i];
        energy += h[i] * h[i];
      }
      const double r = energy == 0.0 ? 0.0 : dot / std::sqrt(energy);
      if (r > best_r ||
          (r == best_r && std::abs(d) < std::abs(best_shift))) {
        best_r = r;
        best_shift = d;
      }
    }

    const double* h = pred.data() + s + best_shift;
    double err = 0.0;
    for (int i = 0; i < kMetricFrame; ++i) {
      const double e = o[i] - h[i];
      err += e * e;
    }
    const double val =
        err == 0.0 ? kSnrCapDb : 10.0 * std::log10(ref_energy / err);
    sum += std::min(val, kSnrCapDb);
    ++count;
  }
  if (count == 0)
    throw DataError("snr: no non-silent reference frames to score");
  return sum / count;
}

double las_rmse(const std::vector<double>& ref,
                const std::vector<double>& pred) {
  if (ref.size() != pred.size())
    throw ShapeError("las_rmse: signals must have equal length");
  const StftConfig cfg{kMelFft, kMelHop, kMelWin};
  const Spectrogram a = stft_magnitude(ref, cfg);
  const Spectrogram b = stft_magnitude(pred, cfg);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double d = std::log10(std::max(a.values[i], kLogFloor)) -
                     std::log10(std::max(b.values[i], kLogFloor));
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.values.size()));
}

std::vector<std::vector<double>> mel_cepstra(const std::vector<double>& x) {
  const MelSpectrogram mel = mel_features(x, kSampleRate);
  std::vector<std::vector<double>> out(
      static_cast<std::size_t>(mel.frames),
      std::vector<double>(kMcdOrder + 1, 0.0));
  const double norm = std::sqrt(2.0 / kMelBins);
  for (int f = 0; f < mel.frames; ++f)
    for (int i = 0; i <= kMcdOrder; ++i) {
      double acc = 0.0;
      for (int n = 0; n < kMelBins; ++n)
        acc += mel.at(f, n) * std::cos(kPi * i * (n + 0.5) / kMelBins);
      out[static_cast<std::size_t>(f)][static_cast<std::size_t>(i)] =
          norm * acc;
    }
  return out;
}

double mcd_from_cepstra(const std::vector<std::vector<double>>& ref,
                        const std::vector<std::vector<double>>& pred) {
  if (ref.size() != pred.size())
    throw ShapeError("mcd: cepstra must have equal frame counts");
  if (ref.empty()) throw DataError("mcd: no frames");
  double total = 0.0;
  for (std::size_t f = 0; f < ref.size(); ++f) {
    const std::size_t need = kMcdOrder + 1;
    if (ref[f].size() < need || pred[f].size() < need)
      throw ShapeError("mcd: frames must carry at least 25 coefficients");
    double q = 0.0;
    for (int i = 1; i <= kMcdOrder; ++i) {
      const double d = ref[f][static_cast<std::size_t>(i)] -
                       pred[f][static_cast<std::size_t>(i)];
      q += d * d;
    }
    total += std::sqrt(2.0 * q);
  }
  return (10.0 / std::log(10.0)) * total / static_cast<double>(ref.size());
}

double mcd(const std::vector<double>& ref, const std::vector<double>& pred) {
  if (ref.size() != pred.size())
    throw ShapeError("mcd: signals must have equal length");
  return mcd_from_cepstra(mel_cepstra(ref), mel_cepstra(pred));
}

F0Track extract_f0(const std::vector<double>& x) {
  const int T = static_cast<int>(x.size());
  const int lag_min = static_cast<int>(std::ceil(kSampleRate / kF0Max));
  const int lag_max = static_cast<int>(std::floor(kSampleRate / kF0Min));
  F0Track track;
  track.f0.reserve(static_cast<std::size_t>(frame_count(x.size())));
  track.voiced.reserve(track.f0.capacity());

  std::vector<double> r(static_cast<std::size_t>(lag_max) + 2, 0.0);
  for (int s = 0; s + kMetricFrame <= T; s += kMetricHop) {
    const double* w = x.data() + s;
    double energy = 0.0;
    for (int i = 0; i < kMetricFrame; ++i) energy += w[i] * w[i];

    double f0 = 0.0;
    bool voiced = false;
    if (energy / kMetricFrame > kEnergyGate) {
      // Normalized autocorrelation over the overlapping stretch; one extra
      // lag on each side for the parabolic refinement.
      double r_max = -1.0;
      for (int tau = lag_min - 1; tau <= lag_max + 1; ++tau) {
        const int n = kMetricFrame - tau;
        double dot = 0.0, e0 = 0.0, e1 = 0.0;
        for (int i = 0; i < n; ++i) {
          dot += w[i] * w[i + tau];
          e0 += w[i] * w[i];
          e1 += w[i + tau] * w[i + tau];
        }
        const double denom = std::sqrt(e0 * e1);
        r[static_cast<std::size_t>(tau)] = denom == 0.0 ? 0.0 : dot / denom;
        if (tau >= lag_min && tau <= lag_max)
          r_max = std::max(r_max, r[static_cast<std::size_t>(tau)]);
      }
      if (r_max >= kVoicingThreshold) {
        // The shortest lag nearly as good as the best, hill-climbed to its
        // local peak: this prefers the fundamental over its multiples.
        int tau = lag_min;
        while (tau < lag_max && r[static_cast<std::size_t>(tau)] < 0.95 * r_max)
          ++tau;
        while (tau + 1 <= lag_max && r[static_cast<std::size_t>(tau + 1)] >
                                         r[static_cast<std::size_t>(tau)])
          ++tau;
        const double rm = r[static_cast<std::size_t>(tau) - 1];
        const double rc = r[static_cast<std::size_t>(tau)];
        const double rp = r[static_cast<std::size_t>(tau) + 1];
        const double denom = rm - 2.0 * rc + rp;
        double delta =
            denom == 0.0 ? 0.0 : std::clamp(0.5 * (rm - rp) / denom, -0.5,
                                            0.5);
        f0 = kSampleRate / (tau + delta);
        voiced = true;
      }
    }
    track.f0.push_back(f0);
    track.voiced.push_back(voiced);
  }
  return track;
}

double f0_rmse_cents(const F0Track& ref, const F0Track& pred) {
  if (ref.f0.size() != pred.f0.size() ||
      ref.voiced.size() != ref.f0.size() ||
      pred.voiced.size() != pred.f0.size())
    throw ShapeError("f0_rmse_cents: tracks must have equal frame counts");
  double acc = 0.0;
  int n = 0;
  for (std::size_t f = 0; f < ref.f0.size(); ++f) {
    if (!ref.voiced[f] || !pred.voiced[f]) continue;
    const double cents = 1200.0 * std::log2(pred.f0[f] / ref.f0[f]);
    acc += cents * cents;
    ++n;
  }
  if (n == 0) throw DataError("f0_rmse_cents: no co-voiced frames");
  return std::sqrt(acc / n);
}

double vuv_error(const F0Track& ref, const F0Track& pred) {
  if (ref.voiced.size() != pred.voiced.size())
    throw ShapeError("vuv_error: tracks must have equal frame counts");
  if (ref.voiced.empty()) throw DataError("vuv_error: empty tracks");
  int mismatches = 0;
  for (std::size_t f = 0; f < ref.voiced.size(); ++f)
    if (ref.voiced[f] != pred.voiced[f]) ++mismatches;
  return 100.0 * mismatches / static_cast<double>(ref.voiced.size());
}

MetricValues evaluate_pair(const std::vector<double>& ref,
                           const std::vector<double>& pred) {
  MetricValues v;
  v.snr_db = snr(ref, pred);
  v.las_rmse_db = las_rmse(ref, pred);
  v.mcd_db = mcd(ref, pred);
  const F0Track a = extract_f0(ref);
  const F0Track b = extract_f0(pred);
  v.vuv_error_pct = vuv_error(a, b);
  bool co_voiced = false;
  for (std::size_t f = 0; f < a.voiced.size(); ++f)
    co_voiced = co_voiced || (a.voiced[f] && b.voiced[f]);
  v.f0_rmse_cent = co_voiced ? f0_rmse_cents(a, b) : 0.0;
  return v;
}

MetricReport evaluate_corpus(const std::vector<std::string>& ids,
                             const std::vector<std::vector<double>>& ref,
                             const std::vector<std::vector<double>>& pred) {
  if (ids.empty())
    throw ArgumentError("evaluate_corpus: empty corpus");
  if (ids.size() != ref.size() || ids.size() != pred.size())
    throw ArgumentError("evaluate_corpus: ids and waveform lists must have "
                        "equal sizes");
  MetricReport report;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    UtteranceMetrics u;
    u.id = ids[i];
    u.values = evaluate_pair(ref[i], pred[i]);
    report.mean.snr_db += u.values.snr_db;
    report.mean.las_rmse_db += u.values.las_rmse_db;
    report.mean.mcd_db += u.values.mcd_db;
    report.mean.f0_rmse_cent += u.values.f0_rmse_cent;
    report.mean.vuv_error_pct += u.values.vuv_error_pct;
    report.utterances.push_back(std::move(u));
  }
  const double n = static_cast<double>(ids.size());
  report.mean.snr_db /= n;
  report.mean.las_rmse_db /= n;
  report.mean.mcd_db /= n;
  report.mean.f0_rmse_cent /= n;
  report.mean.vuv_error_pct /= n;
  return report;
}

void write_metric_report(std::ostream& os, const MetricReport& report) {
  os << "id\tsnr_db\tlas_rmse_db\tmcd_db\tf0_rmse_cent\tvuv_error_pct\n";
  const auto row = [&os](const std::string& id, const MetricValues& v) {
    os << id << '\t' << std::fixed << std::setprecision(4) << v.snr_db
       << '\t' << v.las_rmse_db << '\t' << v.mcd_db << '\t' << v.f0_rmse_cent
       << '\t' << v.vuv_error_pct << '\n';
  };
  for (const UtteranceMetrics& u : report.utterances) row(u.id, u.values);
  row("mean", report.mean);
}

double measure_rtf(ParamStore& store, const GeneratorConfig& cfg,
                   const std::vector<MelSpectrogram>& corpus,
                   std::uint64_t seed) {
  if (corpus.empty()) throw ArgumentError("measure_rtf: empty corpus");
  using clock = std::chrono::steady_clock;
  std::size_t samples = 0;
  const auto t0 = clock::now();
  for (const MelSpectrogram& mel : corpus)
    samples += synthesize(mel, seed, {}, store, cfg).size();
  const std::chrono::duration<double> elapsed = clock::now() - t0;
  return elapsed.count() /
         (static_cast<double>(samples) / kSampleRate);
}

}  // namespace ndps
