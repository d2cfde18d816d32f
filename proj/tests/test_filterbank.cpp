#include <cmath>
#include <cstddef>
#include <vector>

#include "doctest.h"
#include "ndps/filterbank.hpp"
#include "ndps/ops.hpp"
#include "ndps/random.hpp"
#include "oracles.hpp"

using namespace ndps;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Locates the passband of a magnitude response as the midpoint of its
// half-power (-3 dB) edges, walking outward from the argmax. For a
// peak-shaped response this agrees with the argmax; for a flat-topped
// response (where passband ripple makes the raw argmax degenerate among
// near-equal plateau points) it is the well-defined center estimate.
double half_power_midpoint(const std::vector<double>& mag) {
  const int n = static_cast<int>(mag.size());
  int peak = 0;
  for (int j = 1; j < n; ++j)
    if (mag[static_cast<std::size_t>(j)] > mag[static_cast<std::size_t>(peak)])
      peak = j;
  const double threshold = mag[static_cast<std::size_t>(peak)] / std::sqrt(2.0);
  int lo = peak, hi = peak;
  while (lo > 0 && mag[static_cast<std::size_t>(lo - 1)] >= threshold) --lo;
  while (hi + 1 < n && mag[static_cast<std::size_t>(hi + 1)] >= threshold) ++hi;
  return 0.5 * (lo + hi);
}

int argmax_index(const std::vector<double>& mag) {
  int peak = 0;
  for (int j = 1; j < static_cast<int>(mag.size()); ++j)
    if (mag[static_cast<std::size_t>(j)] > mag[static_cast<std::size_t>(peak)])
      peak = j;
  return peak;
}

// Welch-averaged power spectrum (Hann window, half-overlap) on a dense grid;
// returns mean squared-magnitude per FFT bin for bins [0, nfft/2].
std::vector<double> welch_power(const std::vector<double>& x, int nfft) {
  const int hop = nfft / 2;
  std::vector<double> win(static_cast<std::size_t>(nfft));
  for (int n = 0; n < nfft; ++n)
    win[static_cast<std::size_t>(n)] =
        0.5 - 0.5 * std::cos(2.0 * kPi * n / nfft);
  std::vector<double> power(static_cast<std::size_t>(nfft / 2 + 1), 0.0);
  int segments = 0;
  for (int start = 0; start + nfft <= static_cast<int>(x.size());
       start += hop) {
    for (int k = 0; k <= nfft / 2; ++k) {
      double re = 0.0, im = 0.0;
      for (int n = 0; n < nfft; ++n) {
        const double v = x[static_cast<std::size_t>(start + n)] *
                         win[static_cast<std::size_t>(n)];
        const double ang = 2.0 * kPi * k * n / nfft;
        re += v * std::cos(ang);
        im -= v * std::sin(ang);
      }
      power[static_cast<std::size_t>(k)] += re * re + im * im;
    }
    ++segments;
  }
  for (double& p : power) p /= segments;
  return power;
}

}  // namespace

TEST_CASE("prototype spec validation") {
  CHECK_THROWS_AS(design_prototype({-1.0, 62, 0.142}), ArgumentError);
  CHECK_THROWS_AS(design_prototype({0.0, 62, 0.142}), ArgumentError);
  CHECK_THROWS_AS(design_prototype({9.0, 1, 0.142}), ArgumentError);
  CHECK_THROWS_AS(design_prototype({9.0, 62, 0.0}), ArgumentError);
  CHECK_THROWS_AS(design_prototype({9.0, 62, 1.0}), ArgumentError);
  CHECK_THROWS_AS(reference_prototype_spec(3), ArgumentError);
  CHECK_THROWS_AS(reference_prototype_spec(0), ArgumentError);

  const PrototypeSpec two = reference_prototype_spec(2);
  CHECK(two.beta == 9.0);
  CHECK(two.n_taps == 62);
  CHECK(two.cutoff == 0.142);
  const PrototypeSpec four = reference_prototype_spec(4);
  CHECK(four.beta == 9.0);
  CHECK(four.n_taps == 84);
  CHECK(four.cutoff == 0.04);
}

TEST_CASE("prototype symmetry is exact and DC gain is unity") {
  for (int m : {2, 4}) {
    const std::vector<double> h = design_prototype(reference_prototype_spec(m));
    const int N = static_cast<int>(h.size());
    for (int n = 0; n < N; ++n)
      CHECK(h[static_cast<std::size_t>(n)] ==
            h[static_cast<std::size_t>(N - 1 - n)]);
    double dc = 0.0;
    for (double v : h) dc += v;
    CHECK(std::abs(dc - 1.0) <= 1e-9);
    // Lowpass: every tap magnitude is bounded by the center pair.
    const double peak = h[static_cast<std::size_t>(N / 2)];
    CHECK(peak > 0.0);
    for (double v : h) CHECK(std::abs(v) <= peak + 1e-18);
  }
}

TEST_CASE("modulation shapes and center-tap value") {
  const FilterBank two = make_filter_bank(2);
  CHECK(two.m == 2);
  CHECK(two.taps() == 62);
  CHECK(two.delay() == 30);
  CHECK(two.analysis.size() == 2);
  for (const auto& row : two.analysis) CHECK(row.size() == 62);

  const FilterBank four = make_filter_bank(4);
  CHECK(four.m == 4);
  CHECK(four.taps() == 84);
  CHECK(four.delay() == 41);
  CHECK(four.analysis.size() == 4);
  for (const auto& row : four.analysis) CHECK(row.size() == 84);

  CHECK_THROWS_AS(modulate(two.prototype, 1), ArgumentError);
  CHECK_THROWS_AS(modulate(std::vector<double>{1.0}, 2), ArgumentError);

  // Odd tap count puts a tap exactly at the phase-reference point, where the
  // cosine collapses to cos(+-pi/4) and every band's center tap is
  // sqrt(2) * h(center).
  const std::vector<double> odd = design_prototype({5.0, 9, 0.3});
  const FilterBank bank = modulate(odd, 3);
  for (int k = 0; k < 3; ++k)
    CHECK(bank.analysis[static_cast<std::size_t>(k)][4] ==
          doctest::Approx(std::sqrt(2.0) * odd[4]).epsilon(1e-12));

  // Determinism: rebuilding the bank reproduces identical coefficients.
  const FilterBank again = make_filter_bank(2);
  CHECK(again.analysis == two.analysis);
}

TEST_CASE("band centers sit at odd multiples of half the band width") {
  const int grid = 4096;
  for (int m : {2, 4}) {
    const FilterBank bank = make_filter_bank(m);
    for (int k = 0; k < m; ++k) {
      const auto mag =
          magnitude_response(bank.analysis[static_cast<std::size_t>(k)], grid);
      const double expected = (2.0 * k + 1.0) / (2.0 * m) * grid;

      // Peak location via half-power midpoint: robust for the m=2 design,
      // whose flat passband is ripple-limited (plateau values differ by
      // ~3e-6), and identical to the argmax for the peaked m=4 design.
      CHECK(std::abs(half_power_midpoint(mag) - expected) <= 2.0);

      // The response at the nominal center is within 1e-5 relative of the
      // global maximum, so any argmax displacement is plateau degeneracy,
      // not a shifted band.
      const int center = static_cast<int>(expected + 0.5);
      const int peak = argmax_index(mag);
      CHECK(mag[static_cast<std::size_t>(center)] >=
            (1.0 - 1e-5) * mag[static_cast<std::size_t>(peak)]);

      // The m=4 bands are peak-shaped, so there the raw argmax is exact.
      if (m == 4) CHECK(std::abs(peak - expected) <= 2.0);
    }
  }
}

TEST_CASE("white-noise subband energy is rejected at adjacent band centers") {
  RandomStream rng(412);
  std::vector<double> noise(16384);
  for (double& v : noise) v = rng.gaussian();

  for (int m : {2, 4}) {
    const FilterBank bank = make_filter_bank(m);
    const auto bands = decompose(noise, bank);
    const int nfft = 2048;
    for (int k = 0; k < m; ++k) {
      const auto power = welch_power(bands[static_cast<std::size_t>(k)], nfft);
      auto power_at = [&](int band) {
        const double center = (2.0 * band + 1.0) / (2.0 * m) * (nfft / 2);
        return power[static_cast<std::size_t>(
            static_cast<int>(center + 0.5))];
      };
      const double own = power_at(k);
      for (int adj : {k - 1, k + 1}) {
        if (adj < 0 || adj >= m) continue;
        const double rejection_db = 10.0 * std::log10(own / power_at(adj));
        // Regression bound frozen from the shipped designs, which measure
        // between 104 and 115 dB of rejection on this seed.
        CHECK(rejection_db >= 90.0);
        MESSAGE("m=", m, " band ", k, " vs ", adj, ": ", rejection_db, " dB");
      }
    }
  }
}

TEST_CASE("decompose contracts") {
  const FilterBank bank = make_filter_bank(2);

  SUBCASE("invalid bank") {
    FilterBank bad;
    CHECK_THROWS_AS(decompose(Tensor::signal({1.0, 2.0}), bad), ArgumentError);
  }

  SUBCASE("zero input, shape, and exact impulse response") {
    const int T = 40;
    Tensor zero = decompose(Tensor::zeros({1, T}), bank);
    CHECK(zero.channels() == 2);
    CHECK(zero.length() == T);
    for (double v : zero.values()) CHECK(v == 0.0);

    // A unit impulse at p reproduces the taps shifted by p - delay: the
    // delay-compensated output is out[k][t] = h_k[t + delay - p].
    const int p = 20;
    std::vector<double> impulse(T, 0.0);
    impulse[p] = 1.0;
    const auto bands = decompose(impulse, bank);
    for (int k = 0; k < 2; ++k)
      for (int t = 0; t < T; ++t) {
        const int j = t + bank.delay() - p;
        const double expect =
            (j >= 0 && j < bank.taps())
                ? bank.analysis[static_cast<std::size_t>(k)]
                               [static_cast<std::size_t>(j)]
                : 0.0;
        CHECK(bands[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)] ==
              expect);
      }
  }

  SUBCASE("linearity") {
    RandomStream rng(97);
    std::vector<double> x(64), y(64);
    for (double& v : x) v = rng.gaussian();
    for (double& v : y) v = rng.gaussian();
    const auto bx = decompose(x, bank);
    const auto by = decompose(y, bank);
    std::vector<double> mix(64);
    for (int t = 0; t < 64; ++t) mix[static_cast<std::size_t>(t)] =
        0.7 * x[static_cast<std::size_t>(t)] -
        1.3 * y[static_cast<std::size_t>(t)];
    const auto bm = decompose(mix, bank);
    for (int k = 0; k < 2; ++k)
      for (int t = 0; t < 64; ++t) {
        const auto ks = static_cast<std::size_t>(k);
        const auto ts = static_cast<std::size_t>(t);
        CHECK(bm[ks][ts] ==
              doctest::Approx(0.7 * bx[ks][ts] - 1.3 * by[ks][ts])
                  .epsilon(1e-9));
      }
  }

  SUBCASE("gradients flow through the bank") {
    RandomStream rng(55);
    std::vector<double> x0(48);
    for (double& v : x0) v = 0.5 * rng.gaussian();
    auto build = [&](const Tensor& x) {
      return sum(square(decompose(x, bank)));
    };
    ndps::test::check_input_gradient(build, {1, 48}, x0, 5);
  }
}
