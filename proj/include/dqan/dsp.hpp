// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dqan/common.hpp"
#include "dqan/signal.hpp"

namespace dqan::dsp {

/// Receiver laser. `offset_hz` is f_LO - f_server in the envelope frame.
struct LoSpec {
  double offset_hz = 50e6;
  double linewidth_hz = 0.0;
  bool adequate_power = true;
};

struct DetectorSpec {
  double efficiency = 0.51;
  double electronic_noise = 0.19;  // SNU
  double bandwidth_hz = 1.8e9;
  /// false drops the shot noise; only meaningful for loopback tests.
  bool shot_noise = true;
  void validate() const;
};

/// Heterodyne output r(t) = sqrt(2) Re[sqrt(eta) E(t) e^{-i(2 pi f_LO t + phi_LO)}]
/// plus white shot noise of per-sample variance fs/2 and electronic noise of
/// variance v_el fs/2. After down-conversion and a unit-energy matched
/// filter, a vacuum input gives complex outcomes gamma with E|gamma|^2 = 1;
/// the quadratures x = sqrt(2) Re gamma, p = sqrt(2) Im gamma then have
/// vacuum variance 1 and a coherent state |alpha> has mean sqrt(2 eta) alpha.
///
/// `occupied_band_hz`, when positive, is the highest intermediate frequency
/// the caller needs; it must fit inside the detector bandwidth.
RealWaveform heterodyne_detect(const OpticalField& field, const LoSpec& lo, const DetectorSpec& det,
                               std::uint64_t seed, double occupied_band_hz = 0.0);

/// FFT peak (Hann window) inside [lo_hz, hi_hz], refined by a parabola
/// through the log magnitudes of the three bins around the peak. Throws
/// LockFailure unless the peak stands 20 dB above the median bin in band.
double estimate_frequency_offset(const RealWaveform& w, double lo_hz, double hi_hz);
double estimate_frequency_offset(const Baseband& w, double lo_hz, double hi_hz);
inline constexpr double kLockThresholdDb = 20.0;

/// Mix to baseband with sqrt(2) e^{-i 2 pi f t} (absolute time), low-pass
/// with a flat passband up to `cutoff_hz` and a raised-cosine skirt of width
/// `transition_hz`, then keep every `decimation`-th sample.
Baseband downconvert(const RealWaveform& w, double f, double cutoff_hz, double transition_hz,
                     std::size_t decimation = 1);
/// Complex input: mixes with e^{-i 2 pi f t} (no sqrt(2)).
Baseband downconvert(const Baseband& w, double f, double cutoff_hz, double transition_hz,
                     std::size_t decimation = 1);
/// Power response of the down-conversion low-pass at baseband frequency f.
double lowpass_response(double f, double cutoff_hz, double transition_hz);

enum class FilterPurpose { kVib100Hz, kVib1kHz, kVib10kHz, kQkdBand };
FilterPurpose parse_purpose(std::string_view name);
std::string purpose_name(FilterPurpose p);

/// Direct-form biquad b0 + b1 z^-1 + b2 z^-2 over 1 + a1 z^-1 + a2 z^-2.
struct Biquad {
  std::array<double, 3> b{1.0, 0.0, 0.0};
  std::array<double, 2> a{0.0, 0.0};
};

enum class FilterKind { kIirButterworth, kFirWindowedCascade };

struct FilterDesign {
  FilterKind kind = FilterKind::kIirButterworth;
  FilterPurpose purpose = FilterPurpose::kVib100Hz;
  double rate = 0.0;
  double low_hz = 0.0;   // passband edges; low_hz = 0 for a low-pass
  double high_hz = 0.0;
  int order = 0;                 // IIR prototype order
  std::vector<Biquad> sections;  // IIR
  RealVec taps;                  // one FIR stage, odd length, symmetric
  int fir_stages = 0;            // identical FIR stages in cascade

  /// Complex response of one forward pass at frequency f.
  Complex response(double f) const;
  /// Magnitude of the zero-phase response actually applied (|H|^2 for the
  /// IIR forward-backward pass, |H| for the delay-compensated FIR cascade).
  double applied_magnitude(double f) const;
  /// Largest pole radius; < 1 for a stable IIR design.
  double max_pole_radius() const;
};

/// vib-100Hz: Butterworth band-pass 50-200 Hz, prototype order 4.
/// vib-1kHz, vib-10kHz: two cascaded Blackman windowed-sinc band-passes for
/// 0.8-1.2 kHz and 8-12 kHz, each with a transition band half the passband
/// width and the tap count that transition needs.
/// qkd-band: Blackman low-pass passing the RRC signal band (|f| <= 35 MHz at
/// the default plan) and stopping from the pilot offset minus 10 MHz.
FilterDesign design_filter(FilterPurpose purpose, double rate);
/// Variant used by qkd-band with explicit passband/stopband edges.
FilterDesign design_lowpass_fir(double rate, double pass_hz, double stop_hz, int stages = 1);
FilterDesign design_butterworth_bandpass(double rate, double low_hz, double high_hz, int order);
FilterDesign design_fir_bandpass(double rate, double low_hz, double high_hz, double transition_hz,
                                 int stages);

/// Zero-phase filtering. IIR designs run forward then backward over an
/// odd-reflected extension; FIR designs are convolved by FFT with each
/// stage's (N-1)/2 delay removed.
RealVec apply_zero_phase(const FilterDesign& d, const RealVec& x);
ComplexVec apply_zero_phase(const FilterDesign& d, const ComplexVec& x);
/// Circular zero-phase FIR filtering for periodic frames.
ComplexVec apply_zero_phase_circular(const FilterDesign& d, const ComplexVec& x);
PhaseTrace apply_zero_phase(const FilterDesign& d, const PhaseTrace& x);

/// Unwrapped arg of the pilot with its least-squares linear trend removed.
/// Adjacent unwrapped samples differing by more than pi/2 are counted as
/// phase slips.
PhaseTrace estimate_phase(const Baseband& pilot, TraceOrigin origin = TraceOrigin::kPilot);

struct QuadratureSamples {
  RealVec x;
  RealVec p;
  std::size_t user = 0;
  RealVec slot_times;
  std::size_t size() const { return x.size(); }
};

/// Genie symbol timing shared with the transmitter.
struct SlotTiming {
  double first_slot_time = 0.0;  // arrival time of slot 0 at the receiver
  double baud = 50e6;
  double rolloff = 0.3;
  std::size_t n_slots = 0;
  /// Pilot frequency minus signal centre; the pilot's extra phase
  /// 2 pi offset * delay is removed before rotation.
  double pilot_offset_hz = 0.0;
  double propagation_delay = 0.0;
};

/// RRC matched filter (circular), sample at the slot times, rotate by minus
/// the raw pilot phase, and scale to SNU quadratures.
QuadratureSamples recover_quadratures(const Baseband& signal, const PhaseTrace& phase,
                                      const SlotTiming& timing, std::size_t user = 0);
/// Matched-filter outputs gamma before the SNU scaling (x = sqrt(2) Re gamma).
ComplexVec matched_filter_outputs(const Baseband& signal, const PhaseTrace& phase,
                                  const SlotTiming& timing);

/// Amplitude scale s with s^2 (Var_vac - Var_el) = 1.
double calibrate_snu(const DetectorSpec& det, const RealVec& vacuum, const RealVec& electronic);
inline constexpr std::size_t kMinCalibrationSamples = 100000;

/// Symbol-tier heterodyne: draws SNU quadratures for coherent amplitudes
/// `alpha` sent through transmittance T with input-referred excess noise eps.
/// Means are sqrt(2 eta T) (Re, Im) alpha; each quadrature has variance
/// 1 + v_el + eta T eps / 2.
QuadratureSamples simulate_heterodyne_symbols(const ComplexVec& alpha, double T, double eps,
                                              const DetectorSpec& det, std::uint64_t seed,
                                              std::size_t user = 0);

/// Sample variance helper (mean removed).
double variance(const RealVec& x);

}  // namespace dqan::dsp
