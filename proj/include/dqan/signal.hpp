// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>

#include "dqan/common.hpp"

namespace dqan {

/// Complex envelope of the optical field relative to the server carrier.
///
/// Samples are in units of sqrt(photons / s): integrating |E|^2 over time
/// gives a photon count, so the matched-filter projection of one symbol slot
/// onto a unit-energy pulse is directly the coherent amplitude alpha.
/// `start_time` is the absolute time of sample 0; propagation delay shifts it
/// instead of moving samples.
struct OpticalField {
  ComplexVec samples;
  double sample_rate = 0.0;
  double start_time = 0.0;
  double snu_scale = 1.0;  // photons per (sqrt(photons/s))^2 * s

  std::size_t size() const noexcept { return samples.size(); }
  double duration() const noexcept {
    return sample_rate > 0.0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
  double time_at(std::size_t k) const noexcept {
    return start_time + static_cast<double>(k) / sample_rate;
  }
  /// Mean power, photons / s.
  double mean_power() const noexcept;
  /// Total photon number in the record.
  double energy() const noexcept { return mean_power() * duration(); }
};

/// Real detector output (heterodyne photocurrent after ADC).
struct RealWaveform {
  RealVec samples;
  double sample_rate = 0.0;
  double start_time = 0.0;
};

/// Complex baseband samples after down-conversion.
struct Baseband {
  ComplexVec samples;
  double sample_rate = 0.0;
  double start_time = 0.0;
};

enum class TraceOrigin { kPilot, kProbe, kSynthetic };

/// Uniformly sampled phase record in radians.
struct PhaseTrace {
  RealVec samples;
  double sample_rate = 0.0;
  double start_time = 0.0;
  TraceOrigin origin = TraceOrigin::kSynthetic;
  bool unwrapped = true;
  // Linear trend removed during estimation; raw phase = sample + intercept + slope * t.
  double trend_slope = 0.0;      // rad / s
  double trend_intercept = 0.0;  // rad
  std::size_t phase_slips = 0;

  std::size_t size() const noexcept { return samples.size(); }
  double time_at(std::size_t k) const noexcept {
    return start_time + static_cast<double>(k) / sample_rate;
  }
  /// Phase including the removed trend, linearly interpolated at time t.
  double raw_phase_at(double t) const;
};

}  // namespace dqan
