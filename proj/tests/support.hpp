// SPDX-License-Identifier: Apache-2.0
// Small helpers shared by the unit tests. Kept independent of the library's
// own DSP so that measurements here act as oracles.
#pragma once

#include <cmath>
#include <complex>
#include <numeric>
#include <random>
#include <vector>

#include "dqan/common.hpp"
#include "dqan/fft.hpp"

namespace testing {

using dqan::Complex;
using dqan::ComplexVec;
using dqan::RealVec;

/// Energy of x inside [lo, hi] Hz (signed frequencies), from the DFT.
/// Units follow Parseval: sum |X_k|^2 / (N * rate) equals sum |x|^2 / rate.
inline double band_energy(const ComplexVec& x, double rate, double lo, double hi) {
  const auto X = dqan::fft::forward(x);
  const double n = static_cast<double>(x.size());
  double e = 0.0;
  for (std::size_t k = 0; k < X.size(); ++k) {
    const double f = dqan::fft::bin_frequency(k, X.size(), rate);
    if (f >= lo && f <= hi) e += std::norm(X[k]);
  }
  return e / (n * rate);
}

inline double energy(const ComplexVec& x, double rate) {
  double e = 0.0;
  for (const auto& v : x) e += std::norm(v);
  return e / rate;
}

/// Power at the DFT bin nearest to f.
inline double line_power(const ComplexVec& x, double rate, double f) {
  const auto X = dqan::fft::forward(x);
  const double n = static_cast<double>(x.size());
  long k = std::lround(f / rate * n);
  if (k < 0) k += static_cast<long>(x.size());
  return std::norm(X[static_cast<std::size_t>(k)]) / (n * n);
}

inline double mean(const RealVec& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

inline double var(const RealVec& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

inline double pearson(const RealVec& a, const RealVec& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

/// Flat spectrum (unit magnitude, random phase per bin) on the union of the
/// [c - w/2, c + w/2] bands, zero elsewhere.
inline ComplexVec flat_bands(std::size_t n, double rate, const std::vector<double>& centers, double width,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ph(0.0, 2.0 * dqan::kPi);
  ComplexVec X(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = dqan::fft::bin_frequency(k, n, rate);
    for (double c : centers)
      if (std::abs(f - c) <= width / 2) X[k] = std::polar(1.0, ph(rng));
  }
  return dqan::fft::inverse(X);
}

}  // namespace testing
