// SPDX-License-Identifier: Apache-2.0
#include "dqan/signal.hpp"

#include <algorithm>
#include <numeric>

namespace dqan {

double OpticalField::mean_power() const noexcept {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& s : samples) acc += std::norm(s);
  return acc / static_cast<double>(samples.size());
}

double PhaseTrace::raw_phase_at(double t) const {
  if (samples.empty()) return trend_intercept + trend_slope * t;
  const double pos = (t - start_time) * sample_rate;
  const double clamped = std::clamp(pos, 0.0, static_cast<double>(samples.size() - 1));
  const auto i0 = static_cast<std::size_t>(clamped);
  const auto i1 = std::min(i0 + 1, samples.size() - 1);
  const double frac = clamped - static_cast<double>(i0);
  const double v = samples[i0] * (1.0 - frac) + samples[i1] * frac;
  return v + trend_intercept + trend_slope * t;
}

}  // namespace dqan
