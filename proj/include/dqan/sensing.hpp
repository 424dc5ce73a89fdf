// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "dqan/channel.hpp"
#include "dqan/common.hpp"
#include "dqan/dsp.hpp"
#include "dqan/signal.hpp"

namespace dqan::sensing {

/// Delay between the two ends. delta_t = t_U - t_S: positive when the user
/// sees the event after the server does.
struct CorrelationResult {
  double delta_t = 0.0;     // s
  double lag_samples = 0.0; // refined lag
  double peak = 0.0;        // normalised coefficient at the integer peak
  bool refined = false;
  int max_lag = 0;
};

struct LocalizationResult {
  double estimate_km = 0.0;
  double truth_km = std::numeric_limits<double>::quiet_NaN();
  double error_m = std::numeric_limits<double>::quiet_NaN();
  bool clamped = false;
};

/// Normalised cross-correlation c(l) = sum s[n] u[n + l] / (|s| |u|) over
/// |l| <= max_lag (means removed), argmax, then a three-point parabola.
/// Throws NoDetection when the peak is below 0.2.
CorrelationResult correlate_delay(const PhaseTrace& server, const PhaseTrace& user, int max_lag);
/// Lag bound from the link geometry: ceil(L d / c * rate) + 2.
int lag_bound(double length_km, double core_index, double rate);
inline constexpr double kDetectionThreshold = 0.2;

/// L_S = (L - c dt / d) / 2, clamped to [0, L].
LocalizationResult locate(const CorrelationResult& corr, double length_km, double core_index);

struct SensingScenario {
  channel::ChannelSpec link;
  channel::NoiseSpec noise;
  channel::TraceTierSpec tier;
  channel::VibrationEvent event;
  dsp::FilterPurpose band = dsp::FilterPurpose::kVib100Hz;
  /// Correlation window around the strongest filtered-energy segment of the
  /// server trace, seconds; 0 correlates the full traces.
  double gate_s = 0.0;
};

/// Phase-noise variance (rad^2) a trace carries inside the band's passband:
/// both laser walks (one-sided PSD linewidth / (pi f^2)), the white
/// pilot-estimation floor 1 / (2 SNR) per sample, and the system phase noise.
double band_noise_variance(const SensingScenario& sc);

/// Reference scenario for one band: a 10-cycle Hann burst at the band centre
/// whose peak power A^2/2 sits `snr_db` above band_noise_variance, 1 s traces
/// at 1 MS/s, correlation gated to the burst length plus the lag span.
SensingScenario reference_scenario(dsp::FilterPurpose band, double position_km = 30.0, double snr_db = 40.0);
/// Sets the event amplitude so that A^2 / 2 = SNR * band_noise_variance.
void set_band_snr(SensingScenario& sc, double snr_db);

struct TrialRecord {
  std::size_t trial = 0;
  double truth_km = 0.0;
  double estimate_km = std::numeric_limits<double>::quiet_NaN();
  double error_m = std::numeric_limits<double>::quiet_NaN();
  double peak = 0.0;
  bool detected = false;
};

/// One end-to-end localisation: traces, phase estimation, band filter,
/// optional gating, correlation, inversion.
TrialRecord run_localization(const SensingScenario& sc, std::uint64_t seed, std::size_t trial = 0);

struct ResolutionSummary {
  std::vector<TrialRecord> trials;
  std::size_t detected = 0;
  std::size_t censored = 0;
  double mean_error_m = 0.0;
  double rms_error_m = 0.0;
  double p95_abs_error_m = 0.0;
  /// 2 sqrt(2 ln 2) * 1.4826 * MAD of the signed errors.
  double fwhm_m = 0.0;
  /// Separation at which two events' 95% intervals stop overlapping.
  double separation_m = 0.0;
};

/// Monte Carlo over n_runs seeded trials; trial i uses derive_seed(seed, "sensing.trial", i).
ResolutionSummary resolution_trial(const SensingScenario& sc, std::size_t n_runs, std::uint64_t seed,
                                   unsigned threads = 0);

/// Start and length (samples) of the window with the largest energy in x.
std::pair<std::size_t, std::size_t> energy_gate(const RealVec& x, std::size_t window);

}  // namespace dqan::sensing
