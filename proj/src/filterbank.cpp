#include "ndps/filterbank.hpp"

#include <cmath>

#include "ndps/ops.hpp"

namespace ndps {

namespace {

constexpr double kPi = 3.14159265358979323846;

void validate_spec(const PrototypeSpec& spec) {
  if (!(spec.beta > 0.0))
    throw ArgumentError("prototype: beta must be positive");
  if (spec.n_taps < 2) throw ArgumentError("prototype: need at least 2 taps");
  if (!(spec.cutoff > 0.0 && spec.cutoff < 1.0))
    throw ArgumentError("prototype: cutoff must lie in (0, 1)");
}

}  // namespace

PrototypeSpec reference_prototype_spec(int m) {
  switch (m) {
    case 2:
      return {9.0, 62, 0.142};
    case 4:
      return {9.0, 84, 0.04};
    default:
      throw ArgumentError("no reference prototype for M=" + std::to_string(m));
  }
}

std::vector<double> design_prototype(const PrototypeSpec& spec) {
  validate_spec(spec);
  const int N = spec.n_taps;
  const double center = (N - 1) / 2.0;
  const double i0_beta = std::cyl_bessel_i(0.0, spec.beta);
  std::vector<double> h(static_cast<std::size_t>(N));
  // Fill the first half and mirror it so symmetry is exact to the bit; for
  // even N the center is a half-integer and libm sin/cos are not guaranteed
  // symmetric around it.
  for (int n = 0; n <= (N - 1) / 2; ++n) {
    const double t = n - center;  // never 0 for even N
    const double sinc =
        t == 0.0 ? spec.cutoff : std::sin(spec.cutoff * kPi * t) / (kPi * t);
    const double r = 2.0 * n / (N - 1) - 1.0;  // in [-1, 0]
    const double kaiser =
        std::cyl_bessel_i(0.0, spec.beta * std::sqrt(1.0 - r * r)) / i0_beta;
    h[static_cast<std::size_t>(n)] = kaiser * sinc;
    h[static_cast<std::size_t>(N - 1 - n)] = h[static_cast<std::size_t>(n)];
  }
  double dc = 0.0;
  for (double v : h) dc += v;
  for (double& v : h) v /= dc;
  return h;
}

FilterBank modulate(const std::vector<double>& prototype, int m) {
  if (m < 2) throw ArgumentError("modulate: need at least 2 bands");
  if (prototype.size() < 2) throw ArgumentError("modulate: empty prototype");
  FilterBank bank;
  bank.m = m;
  bank.prototype = prototype;
  const int N = static_cast<int>(prototype.size());
  const double center = (N - 1) / 2.0;
  bank.analysis.resize(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    auto& row = bank.analysis[static_cast<std::size_t>(k)];
    row.resize(static_cast<std::size_t>(N));
    const double omega = (2 * k + 1) * kPi / (2.0 * m);
    const double phase = (k % 2 == 0 ? 1.0 : -1.0) * kPi / 4.0;
    for (int n = 0; n < N; ++n)
      row[static_cast<std::size_t>(n)] =
          2.0 * prototype[static_cast<std::size_t>(n)] *
          std::cos(omega * (n - center) + phase);
  }
  return bank;
}

FilterBank make_filter_bank(int m) {
  return modulate(design_prototype(reference_prototype_spec(m)), m);
}

Tensor decompose(const Tensor& e, const FilterBank& bank) {
  if (bank.m < 2 || bank.analysis.empty())
    throw ArgumentError("decompose: invalid filter bank");
  return fir_bank(e, bank.analysis, bank.delay());
}

std::vector<std::vector<double>> decompose(const std::vector<double>& e,
                                           const FilterBank& bank) {
  Tensor out = decompose(Tensor::signal(e), bank);
  const int T = out.length();
  std::vector<std::vector<double>> bands(static_cast<std::size_t>(bank.m));
  for (int k = 0; k < bank.m; ++k)
    bands[static_cast<std::size_t>(k)] = std::vector<double>(
        out.values().begin() + static_cast<std::size_t>(k) * T,
        out.values().begin() + static_cast<std::size_t>(k + 1) * T);
  return bands;
}

std::vector<double> magnitude_response(const std::vector<double>& taps,
                                       int points) {
  if (points < 1) throw ArgumentError("magnitude_response: no grid points");
  std::vector<double> mag(static_cast<std::size_t>(points));
  for (int j = 0; j < points; ++j) {
    const double omega = kPi * j / points;
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < taps.size(); ++n) {
      re += taps[n] * std::cos(omega * static_cast<double>(n));
      im -= taps[n] * std::sin(omega * static_cast<double>(n));
    }
    mag[static_cast<std::size_t>(j)] = std::hypot(re, im);
  }
  return mag;
}

}  // namespace ndps
