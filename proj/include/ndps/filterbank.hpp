#ifndef NDPS_FILTERBANK_HPP
#define NDPS_FILTERBANK_HPP

#include <vector>

#include "ndps/tensor.hpp"

namespace ndps {

// Kaiser-windowed lowpass prototype parameters. cutoff is a fraction of
// pi rad/sample (Nyquist = 1).
struct PrototypeSpec {
  double beta = 0.0;
  int n_taps = 0;
  double cutoff = 0.0;
};

// Reference designs for the shipped band counts: M=2 -> (beta 9, N 62,
// cutoff 0.142), M=4 -> (beta 9, N 84, cutoff 0.04).
PrototypeSpec reference_prototype_spec(int m);

// Kaiser window times ideal-lowpass impulse response centered at (N-1)/2,
// normalized to unit DC gain. Taps are exactly symmetric (computed half,
// mirrored).
std::vector<double> design_prototype(const PrototypeSpec& spec);

// M-channel cosine-modulated analysis bank derived from one prototype.
struct FilterBank {
  int m = 0;
  std::vector<double> prototype;
  std::vector<std::vector<double>> analysis;  // m rows of n_taps coefficients

  int taps() const { return static_cast<int>(prototype.size()); }
  // Group-delay compensation applied by decompose().
  int delay() const { return (taps() - 1) / 2; }
};

// h_k(n) = 2 h(n) cos((2k+1) (pi/2M) (n - (N-1)/2) + (-1)^k pi/4).
FilterBank modulate(const std::vector<double>& prototype, int m);

// Convenience: reference spec -> prototype -> modulated bank.
FilterBank make_filter_bank(int m);

// Subband decomposition: M delay-compensated linear convolutions of a
// single-channel signal, each truncated to the input length. Differentiable
// w.r.t. e (the coefficients are fixed).
Tensor decompose(const Tensor& e, const FilterBank& bank);
std::vector<std::vector<double>> decompose(const std::vector<double>& e,
                                           const FilterBank& bank);

// |H(omega)| sampled at `points` frequencies spanning [0, pi), i.e. grid
// index j maps to normalized frequency j/points.
std::vector<double> magnitude_response(const std::vector<double>& taps,
                                       int points);

}  // namespace ndps

#endif  // NDPS_FILTERBANK_HPP
