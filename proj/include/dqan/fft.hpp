// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>

#include "dqan/common.hpp"

namespace dqan::fft {

// Thin FFTW wrappers. Planning is serialized internally; execution is
// re-entrant, so these may be called from several threads at once.

/// Unnormalized forward DFT.
ComplexVec forward(std::span<const Complex> x);
/// Inverse DFT scaled by 1/N, so inverse(forward(x)) == x.
ComplexVec inverse(std::span<const Complex> spectrum);

void forward_inplace(ComplexVec& x);
void inverse_inplace(ComplexVec& x);

/// Signed frequency (Hz) of DFT bin k for an n-point transform at `rate`.
inline double bin_frequency(std::size_t k, std::size_t n, double rate) {
  const auto half = (n + 1) / 2;
  const double kk = k < half ? static_cast<double>(k)
                             : static_cast<double>(k) - static_cast<double>(n);
  return kk * rate / static_cast<double>(n);
}

/// Smallest 2^a 3^b 5^c >= n.
std::size_t good_size(std::size_t n);

}  // namespace dqan::fft
