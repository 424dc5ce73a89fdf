// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dqan/common.hpp"
#include "dqan/signal.hpp"

namespace dqan::encoder {

/// Frequency layout of the n sidemodes sharing one optical carrier.
///
/// Sidemode j is centred at base_freq + j * spacing (envelope-relative). Each
/// user's QPSK train is root-raised-cosine shaped and carries a pilot tone at
/// centre + pilot_offset. `amplitudes[j]` is alpha_j, so user j contributes
/// 2 alpha_j^2 SNU of modulation variance.
struct SidemodePlan {
  std::size_t n_users = 8;
  double base_freq_hz = 100e6;
  double spacing_hz = 200e6;
  double baud = 50e6;
  double signal_bandwidth_hz = 100e6;
  std::vector<double> amplitudes;
  double pilot_offset_hz = 75e6;
  double pilot_amplitude = 10.0;  // pilot field amplitude / (alpha_j * sqrt(baud))
  double rolloff = 0.3;
  double sample_rate = 4e9;

  double center_frequency(std::size_t j) const {
    return base_freq_hz + static_cast<double>(j) * spacing_hz;
  }
  double pilot_frequency(std::size_t j) const { return center_frequency(j) + pilot_offset_hz; }
  double highest_frequency() const { return center_frequency(n_users - 1); }
  /// V_M = sum_j 2 alpha_j^2.
  double modulation_variance() const;
  double user_modulation_variance(std::size_t j) const { return 2.0 * amplitudes.at(j) * amplitudes.at(j); }
  std::size_t samples_per_symbol() const;

  /// Throws ConfigError listing every violated invariant.
  void validate() const;

  /// The eight-user layout of the reference experiment with V_A = 1.17 per user.
  static SidemodePlan reference(double modulation_variance_per_user = 1.17);
};

/// QPSK symbol indices k in {0,1,2,3}, one row per user.
struct SymbolFrame {
  std::vector<std::vector<std::uint8_t>> symbols;
  std::size_t n_slots = 0;
  std::uint64_t seed = 0;

  std::size_t n_users() const noexcept { return symbols.size(); }
  /// alpha_j * exp(i pi k / 2) for user j, slot s.
  Complex amplitude(const SidemodePlan& plan, std::size_t user, std::size_t slot) const;
};

/// Two-arm IQ modulator with depths mu +/- sigma and a bias phase error.
struct IqModulatorModel {
  double mean_depth = 0.1;       // mu, rad
  double imbalance = 0.0;        // sigma, rad
  double bias_phase_error = 0.0; // rad, deviation from the quadrature bias

  /// Complex gains of the intended (+f) and mirror (-f) first-order sidebands,
  /// normalised so an ideal modulator has gains (1, 0).
  Complex positive_gain() const;
  Complex mirror_gain() const;
  /// 10 log10(P+ / P-); infinite for an ideal modulator.
  double suppression_db() const;
  void validate() const;

  static IqModulatorModel from_suppression_db(double suppression_db, double mean_depth = 0.1);
};

/// Maximum modulation depth for which the first-order model is accepted.
inline constexpr double kMaxModulationDepth = 0.2;

SymbolFrame generate_symbols(const SidemodePlan& plan, std::size_t n_slots, std::uint64_t seed);

/// Root-raised-cosine spectrum of a unit-energy pulse at frequency f.
double rrc_spectrum(double f, double baud, double rolloff);

/// Sum over users of the shaped QPSK train up-shifted to F_j plus its pilot.
/// Pulses wrap circularly over the frame; symbol s of every user is centred
/// at sample s * samples_per_symbol.
Baseband build_baseband_waveform(const SymbolFrame& frame, const SidemodePlan& plan);

/// Same construction for a single user, without the pilot if `with_pilot` is false.
Baseband build_user_waveform(const SymbolFrame& frame, const SidemodePlan& plan,
                             std::size_t user, bool with_pilot = true);

/// First-order (m = 1) IQ-modulator output: carrier * (g+ d + g- conj(d)).
/// Higher-order sidebands are dropped; at mu <= 0.2 they sit below -40 dB.
OpticalField iq_modulate(const Baseband& drive, const IqModulatorModel& model,
                         const OpticalField& carrier);
/// Ideal unit-amplitude carrier.
OpticalField iq_modulate(const Baseband& drive, const IqModulatorModel& model);

/// g1 = sqrt(P+ / (P+ + P-)), the power share of the intended sideband.
double sideband_ratio(const IqModulatorModel& model);

}  // namespace dqan::encoder
