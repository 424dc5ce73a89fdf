// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "dqan/common.hpp"
#include "dqan/signal.hpp"

namespace dqan::channel {

/// Server at position 0, user at `length_km`.
struct ChannelSpec {
  double length_km = 80.0;
  double loss_db_per_km = 0.2;
  double core_index = kDefaultCoreIndex;

  double transmittance() const;
  /// One-way group delay L d / c, seconds.
  double delay_s() const;
  double delay_to(double position_km) const;
  void validate() const;
};

enum class VibrationKind { kSinusoid, kBurst };

/// Phase disturbance imprinted at one point of the link.
///
/// A sinusoid runs for `duration_s` from `start_s` with hard edges. A burst
/// is a sinusoid under a Hann envelope spanning the same interval, which
/// keeps its correlation from repeating at every carrier period.
struct VibrationEvent {
  double position_km = 40.0;
  VibrationKind kind = VibrationKind::kBurst;
  double frequency_hz = 100.0;
  double amplitude_rad = 1.0;
  double start_s = 0.2;
  double duration_s = 0.05;

  /// Phase (rad) the event adds to light passing the vibration point at time t.
  double phase(double t) const;
  void validate(double trace_rate, double length_km) const;
};

struct NoiseSpec {
  double server_linewidth_hz = 100.0;
  double lo_linewidth_hz = 100.0;
  /// One-sided density of the white system phase noise, rad^2/Hz.
  double system_phase_psd = 0.0;
  /// Excess noise of the bare link, SNU referred to the channel input.
  double excess_noise = 0.0;
  double eps_freq = 0.0;
  double eps_filt = 0.0;
  /// Backward probe power; -inf means the probe is off.
  double probe_power_dbm = -std::numeric_limits<double>::infinity();

  bool probe_on() const { return std::isfinite(probe_power_dbm); }
  void validate() const;
};

enum class Direction { kForward, kBackward };

/// Propagate a field along the link.
///
/// Forward runs server to user, backward user to server. The amplitude is
/// scaled by sqrt(T), `start_time` advances by the link delay, and every
/// sample picks up exp(i [phi_laser + phi_vib(t - tau_dir) + phi_sys]),
/// where tau_dir is the delay from the vibration point to the output end.
/// The source-laser walk is evaluated at emission time. Excess noise enters
/// as white complex Gaussian noise of per-sample variance (T eps / 2) fs,
/// which adds T eps to the quadrature variance of every matched-filter mode.
OpticalField propagate(const OpticalField& field, const ChannelSpec& spec, const NoiseSpec& noise,
                       const std::vector<VibrationEvent>& events, Direction direction,
                       std::uint64_t seed);

/// Wiener phase walk with increment variance 2 pi linewidth / rate.
PhaseTrace laser_phase_walk(double linewidth_hz, double duration_s, double rate, std::uint64_t seed);

/// Raman noise of the backward probe, linear in power with the anchor
/// 4.69e-6 SNU at -43 dBm.
double raman_noise(double probe_power_dbm);
inline constexpr double kRamanAnchorSnu = 4.69e-6;
inline constexpr double kRamanAnchorDbm = -43.0;

struct ExcessNoiseBudget {
  double cv_qkd = 0.0;
  double sasrs = 0.0;
  double freq = 0.0;
  double filt = 0.0;
  double total() const { return cv_qkd + sasrs + freq + filt; }
};

/// eps = eps_CV-QKD + eps_SASRS + eps_Freq + eps_Filt.
ExcessNoiseBudget excess_noise_budget(const NoiseSpec& noise, double measured_eps_cv);

/// Parameters of the phase-trace tier used for seconds-long sensing runs.
struct TraceTierSpec {
  double rate = 1e6;
  double duration_s = 1.0;
  /// Residual pilot/probe beat frequency left after coarse down-conversion.
  double residual_offset_hz = 1.2e3;
  /// Per-sample pilot SNR at the trace rate, dB; +inf disables the noise.
  double pilot_snr_db = 40.0;
  double probe_snr_db = 40.0;
};

struct TracePair {
  Baseband user_pilot;    // forward pilot beat recorded at the user
  Baseband server_probe;  // backward probe beat recorded at the server
};

/// Complex beat notes at both ends, sampled at the trace rate on a shared
/// clock. The user sees exp(i[2 pi df t + phi_U(t) - phi_S(t - tau) +
/// phi_vib(t - tau_U) + phi_sys]) and the server the mirror expression with
/// tau_S, with tau = L d / c applied to the remote laser.
TracePair simulate_phase_traces(const ChannelSpec& spec, const NoiseSpec& noise,
                                const std::vector<VibrationEvent>& events, const TraceTierSpec& tier,
                                std::uint64_t seed);

}  // namespace dqan::channel
