#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ndps/cli_io.hpp"
#include "ndps/filterbank.hpp"
#include "ndps/generator.hpp"
#include "ndps/metrics.hpp"
#include "ndps/spectral.hpp"
#include "ndps/trainer.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace ndps;

namespace {

using DoubleArray =
    py::array_t<double, py::array::c_style | py::array::forcecast>;

std::vector<double> to_vec(const DoubleArray& a) {
  if (a.ndim() != 1) throw py::value_error("expected a 1-D array");
  const double* p = a.data();
  return std::vector<double>(p, p + a.size());
}

py::array_t<double> from_vec(const std::vector<double>& v) {
  py::array_t<double> a(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> from_rows(const std::vector<std::vector<double>>& rows) {
  const py::ssize_t r = static_cast<py::ssize_t>(rows.size());
  const py::ssize_t c =
      r > 0 ? static_cast<py::ssize_t>(rows[0].size()) : 0;
  py::array_t<double> a({r, c});
  for (py::ssize_t i = 0; i < r; ++i)
    std::copy(rows[static_cast<std::size_t>(i)].begin(),
              rows[static_cast<std::size_t>(i)].end(),
              a.mutable_data(i, 0));
  return a;
}

MelSpectrogram to_mel(const DoubleArray& a) {
  if (a.ndim() != 2 || a.shape(1) != kMelBins)
    throw py::value_error("expected a [frames, 80] mel array");
  MelSpectrogram mel;
  mel.frames = static_cast<int>(a.shape(0));
  const double* p = a.data();
  mel.values.assign(p, p + a.size());
  return mel;
}

py::array_t<double> from_mel(const MelSpectrogram& mel) {
  py::array_t<double> a(
      {static_cast<py::ssize_t>(mel.frames), static_cast<py::ssize_t>(kMelBins)});
  std::copy(mel.values.begin(), mel.values.end(), a.mutable_data());
  return a;
}

NoiseControl to_ctrl(double mu, const std::vector<int>& bands) {
  NoiseControl ctrl;
  ctrl.mu = mu;
  ctrl.bands = bands;
  return ctrl;
}

py::dict report_dict(const LossReport& r) {
  return py::dict("l_sc"_a = r.l_sc, "l_mag"_a = r.l_mag,
                  "l_stft"_a = r.l_stft, "l_adv"_a = r.l_adv,
                  "l_comb"_a = r.l_comb);
}

}  // namespace

PYBIND11_MODULE(ndps, m) {
  m.doc() =
      "Deterministic-plus-stochastic neural vocoder: features, training, "
      "synthesis, noise control, and objective evaluation.";

  m.attr("SAMPLE_RATE") = kSampleRate;
  m.attr("MEL_BINS") = kMelBins;
  m.attr("HOP") = kMelHop;

  // --- features and file I/O -------------------------------------------------
  m.def(
      "mel_features",
      [](const DoubleArray& x, int sample_rate) {
        return from_mel(mel_features(to_vec(x), sample_rate));
      },
      "x"_a, "sample_rate"_a = kSampleRate,
      "80-bin log-mel features, [frames, 80], one frame per 80 samples.");
  m.def(
      "read_wav",
      [](const std::string& path) { return from_vec(read_wav(path).samples); },
      "path"_a, "Load a mono 16 kHz 16-bit PCM WAV as float64 in [-1, 1).");
  m.def(
      "write_wav",
      [](const std::string& path, const DoubleArray& x) {
        write_wav(path, to_vec(x));
      },
      "path"_a, "x"_a);
  m.def(
      "read_feature_file",
      [](const std::string& path) { return from_mel(read_feature_file(path)); },
      "path"_a);
  m.def(
      "write_feature_file",
      [](const std::string& path, const DoubleArray& mel) {
        write_feature_file(path, to_mel(mel));
      },
      "path"_a, "mel"_a);

  // --- losses and metrics ----------------------------------------------------
  m.def(
      "stft_loss",
      [](const DoubleArray& ref, const DoubleArray& pred) {
        LossReport r;
        multires_stft_loss(Tensor::signal(to_vec(ref)),
                           Tensor::signal(to_vec(pred)), &r);
        return report_dict(r);
      },
      "ref"_a, "pred"_a,
      "Multi-resolution STFT loss components for a waveform pair.");
  m.def(
      "snr",
      [](const DoubleArray& ref, const DoubleArray& pred) {
        return snr(to_vec(ref), to_vec(pred));
      },
      "ref"_a, "pred"_a);
  m.def(
      "las_rmse",
      [](const DoubleArray& ref, const DoubleArray& pred) {
        return las_rmse(to_vec(ref), to_vec(pred));
      },
      "ref"_a, "pred"_a);
  m.def(
      "mcd",
      [](const DoubleArray& ref, const DoubleArray& pred) {
        return mcd(to_vec(ref), to_vec(pred));
      },
      "ref"_a, "pred"_a);
  m.def(
      "extract_f0",
      [](const DoubleArray& x) {
        const F0Track t = extract_f0(to_vec(x));
        return py::dict("f0"_a = from_vec(t.f0), "voiced"_a = t.voiced);
      },
      "x"_a);
  m.def(
      "evaluate_pair",
      [](const DoubleArray& ref, const DoubleArray& pred) {
        const MetricValues v = evaluate_pair(to_vec(ref), to_vec(pred));
        return py::dict("snr_db"_a = v.snr_db, "las_rmse_db"_a = v.las_rmse_db,
                        "mcd_db"_a = v.mcd_db,
                        "f0_rmse_cent"_a = v.f0_rmse_cent,
                        "vuv_error_pct"_a = v.vuv_error_pct);
      },
      "ref"_a, "pred"_a);

  // --- filter bank -----------------------------------------------------------
  py::class_<FilterBank>(m, "FilterBank",
                         "Cosine-modulated analysis bank (2 or 4 bands).")
      .def(py::init([](int bands) { return make_filter_bank(bands); }),
           "bands"_a)
      .def_readonly("bands", &FilterBank::m)
      .def_property_readonly(
          "prototype",
          [](const FilterBank& b) { return from_vec(b.prototype); })
      .def_property_readonly(
          "analysis", [](const FilterBank& b) { return from_rows(b.analysis); })
      .def(
          "decompose",
          [](const FilterBank& b, const DoubleArray& x) {
            return from_rows(decompose(to_vec(x), b));
          },
          "x"_a, "Delay-compensated subband signals, [bands, len(x)].");
  m.def(
      "magnitude_response",
      [](const DoubleArray& taps, int points) {
        return from_vec(magnitude_response(to_vec(taps), points));
      },
      "taps"_a, "points"_a = 2048);

  // --- checkpoints and synthesis ---------------------------------------------
  py::class_<Checkpoint>(m, "Checkpoint", "A saved training state.")
      .def_property_readonly("step",
                             [](const Checkpoint& c) { return c.step; })
      .def(
          "synthesize",
          [](Checkpoint& c, const DoubleArray& mel, std::uint64_t seed,
             double mu, const std::vector<int>& bands) {
            return from_vec(synthesize(to_mel(mel), seed, to_ctrl(mu, bands),
                                       c.params, c.gen_cfg));
          },
          "mel"_a, "seed"_a = 0, "mu"_a = 0.0,
          "bands"_a = std::vector<int>{},
          "Waveform of len 80*frames; mu offsets the stochastic masks of "
          "the selected bands (all bands when empty).");
  m.def("load_checkpoint", &load_checkpoint, "path"_a);

  // --- training --------------------------------------------------------------
  py::class_<TrainerState>(m, "Trainer",
                           "Adversarial trainer over one generator; "
                           "construct from a key=value config mapping.")
      .def(py::init([](const std::map<std::string, std::string>& config) {
             const ToolkitConfig tc = parse_toolkit_config(config);
             return make_trainer(tc.gen, tc.disc, tc.train);
           }),
           "config"_a = std::map<std::string, std::string>{})
      .def_readonly("step", &TrainerState::step)
      .def(
          "train_step",
          [](TrainerState& st, const DoubleArray& mel,
             const DoubleArray& wave) {
            const std::vector<Utterance> corpus{{to_mel(mel), to_vec(wave)}};
            return report_dict(train_step(st, corpus));
          },
          "mel"_a, "wave"_a,
          "One optimization step on a single-utterance corpus; returns the "
          "loss report.")
      .def(
          "synthesize",
          [](TrainerState& st, const DoubleArray& mel, std::uint64_t seed,
             double mu, const std::vector<int>& bands) {
            return from_vec(synthesize(to_mel(mel), seed, to_ctrl(mu, bands),
                                       st.store, st.gen_cfg));
          },
          "mel"_a, "seed"_a = 0, "mu"_a = 0.0,
          "bands"_a = std::vector<int>{})
      .def(
          "save",
          [](const TrainerState& st, const std::string& path) {
            save_checkpoint(path, snapshot(st));
          },
          "path"_a)
      .def(
          "restore",
          [](TrainerState& st, const Checkpoint& ck) { restore(st, ck); },
          "checkpoint"_a);

  // --- command-line toolkit --------------------------------------------------
  m.def("run_cli", &run_cli, "args"_a,
        "Run a toolkit subcommand; args[0] is the program name. Returns the "
        "process exit code (0 ok, 1 usage, 2 runtime failure).");
}
