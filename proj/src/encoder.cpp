// SPDX-License-Identifier: Apache-2.0
#include "dqan/encoder.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "dqan/fft.hpp"

namespace dqan::encoder {

double SidemodePlan::modulation_variance() const {
  double v = 0.0;
  for (double a : amplitudes) v += 2.0 * a * a;
  return v;
}

std::size_t SidemodePlan::samples_per_symbol() const {
  return static_cast<std::size_t>(std::llround(sample_rate / baud));
}

void SidemodePlan::validate() const {
  std::ostringstream problems;
  if (n_users == 0) problems << "plan has zero users; ";
  if (amplitudes.size() != n_users)
    problems << "plan lists " << amplitudes.size() << " amplitudes for " << n_users << " users; ";
  if (!(base_freq_hz > 0.0)) problems << "base frequency must be positive; ";
  if (!(spacing_hz > 0.0)) problems << "sidemode spacing must be positive; ";
  if (!(baud > 0.0)) problems << "baud must be positive; ";
  if (!(signal_bandwidth_hz > 0.0) || !(signal_bandwidth_hz < spacing_hz))
    problems << "signal bandwidth must lie in (0, spacing); ";
  if (!(rolloff >= 0.0 && rolloff <= 1.0)) problems << "roll-off must lie in [0, 1]; ";
  const double vm = modulation_variance();
  if (!(vm > 0.0) || !std::isfinite(vm)) problems << "total modulation variance must be finite and positive; ";
  for (double a : amplitudes)
    if (!(a >= 0.0) || !std::isfinite(a)) problems << "amplitudes must be finite and non-negative; ";
  if (n_users > 0 && base_freq_hz > 0.0) {
    const double top = highest_frequency() + signal_bandwidth_hz / 2.0;
    if (!(sample_rate > 2.0 * top))
      problems << "sample rate " << sample_rate << " must exceed " << 2.0 * top << " Hz; ";
    if (!(sample_rate > 2.0 * (highest_frequency() + pilot_offset_hz)))
      problems << "highest pilot lies above Nyquist; ";
  }
  if (baud > 0.0) {
    const double sps = sample_rate / baud;
    if (std::abs(sps - std::round(sps)) > 1e-9 || sps < 2.0)
      problems << "sample rate must be an integer multiple (>= 2) of the baud; ";
  }
  const auto msg = problems.str();
  if (!msg.empty()) throw ConfigError("invalid sidemode plan: " + msg.substr(0, msg.size() - 2));
}

SidemodePlan SidemodePlan::reference(double modulation_variance_per_user) {
  SidemodePlan p;
  p.amplitudes.assign(p.n_users, std::sqrt(modulation_variance_per_user / 2.0));
  return p;
}

Complex SymbolFrame::amplitude(const SidemodePlan& plan, std::size_t user, std::size_t slot) const {
  static const Complex kPhase[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return plan.amplitudes.at(user) * kPhase[symbols.at(user).at(slot) & 3u];
}

SymbolFrame generate_symbols(const SidemodePlan& plan, std::size_t n_slots, std::uint64_t seed) {
  if (plan.n_users == 0) throw ConfigError("generate_symbols: plan has zero users");
  if (n_slots == 0) throw ConfigError("generate_symbols: zero slots requested");
  SymbolFrame frame;
  frame.n_slots = n_slots;
  frame.seed = seed;
  frame.symbols.resize(plan.n_users);
  for (std::size_t j = 0; j < plan.n_users; ++j) {
    std::mt19937_64 rng(derive_seed(seed, "symbols", j));
    auto& row = frame.symbols[j];
    row.resize(n_slots);
    // Top two bits of a 64-bit draw: exactly uniform on {0,1,2,3}.
    for (auto& k : row) k = static_cast<std::uint8_t>(rng() >> 62);
  }
  return frame;
}

double rrc_spectrum(double f, double baud, double rolloff) {
  const double period = 1.0 / baud;
  const double af = std::abs(f);
  const double f1 = (1.0 - rolloff) * baud / 2.0;
  const double f2 = (1.0 + rolloff) * baud / 2.0;
  double rc;
  if (af <= f1) {
    rc = 1.0;
  } else if (af >= f2) {
    rc = 0.0;
  } else {
    rc = 0.5 * (1.0 + std::cos(kPi * period / rolloff * (af - f1)));
  }
  return std::sqrt(period * rc);
}

namespace {

// Unit-energy RRC train of user j at complex baseband, circular over the frame.
ComplexVec shaped_train(const SymbolFrame& frame, const SidemodePlan& plan, std::size_t user) {
  const std::size_t sps = plan.samples_per_symbol();
  const std::size_t n = frame.n_slots * sps;
  ComplexVec x(n, Complex{});
  // Discrete impulses of weight fs so that sum |p|^2 / fs = 1 after shaping.
  for (std::size_t s = 0; s < frame.n_slots; ++s)
    x[s * sps] = frame.amplitude(plan, user, s) * plan.sample_rate;
  fft::forward_inplace(x);
  for (std::size_t k = 0; k < n; ++k)
    x[k] *= rrc_spectrum(fft::bin_frequency(k, n, plan.sample_rate), plan.baud, plan.rolloff);
  fft::inverse_inplace(x);
  return x;
}

void add_user(ComplexVec& out, const SymbolFrame& frame, const SidemodePlan& plan,
              std::size_t user, bool with_pilot) {
  const auto train = shaped_train(frame, plan, user);
  const double fs = plan.sample_rate;
  const double fc = plan.center_frequency(user);
  const double fp = plan.pilot_frequency(user);
  const double pilot_amp = plan.pilot_amplitude * plan.amplitudes[user] * std::sqrt(plan.baud);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double t = static_cast<double>(k) / fs;
    out[k] += train[k] * std::polar(1.0, 2.0 * kPi * std::fmod(fc * t, 1.0));
    if (with_pilot) out[k] += std::polar(pilot_amp, 2.0 * kPi * std::fmod(fp * t, 1.0));
  }
}

}  // namespace

Baseband build_baseband_waveform(const SymbolFrame& frame, const SidemodePlan& plan) {
  plan.validate();
  if (frame.n_users() != plan.n_users)
    throw ConfigError("build_baseband_waveform: frame and plan disagree on user count");
  Baseband out;
  out.sample_rate = plan.sample_rate;
  out.samples.assign(frame.n_slots * plan.samples_per_symbol(), Complex{});
  for (std::size_t j = 0; j < plan.n_users; ++j) add_user(out.samples, frame, plan, j, true);
  return out;
}

Baseband build_user_waveform(const SymbolFrame& frame, const SidemodePlan& plan,
                             std::size_t user, bool with_pilot) {
  plan.validate();
  if (user >= plan.n_users || user >= frame.n_users())
    throw ConfigError("build_user_waveform: user index out of range");
  Baseband out;
  out.sample_rate = plan.sample_rate;
  out.samples.assign(frame.n_slots * plan.samples_per_symbol(), Complex{});
  add_user(out.samples, frame, plan, user, with_pilot);
  return out;
}

Complex IqModulatorModel::positive_gain() const {
  const double mu_i = mean_depth + imbalance;
  const double mu_q = mean_depth - imbalance;
  return (mu_i + std::polar(mu_q, bias_phase_error)) / (2.0 * mean_depth);
}

Complex IqModulatorModel::mirror_gain() const {
  const double mu_i = mean_depth + imbalance;
  const double mu_q = mean_depth - imbalance;
  return (mu_i - std::polar(mu_q, bias_phase_error)) / (2.0 * mean_depth);
}

double IqModulatorModel::suppression_db() const {
  const double m = std::norm(mirror_gain());
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(std::norm(positive_gain()) / m);
}

void IqModulatorModel::validate() const {
  if (!(mean_depth > 0.0)) throw ConfigError("IQ modulator: mean depth must be positive");
  if (mean_depth > kMaxModulationDepth)
    throw WeakModulationError("IQ modulator: mean depth exceeds the weak-modulation limit of 0.2 rad");
  if (!(imbalance >= 0.0) || !(imbalance < mean_depth))
    throw ConfigError("IQ modulator: imbalance must satisfy 0 <= sigma < mu");
}

IqModulatorModel IqModulatorModel::from_suppression_db(double suppression_db, double mean_depth) {
  IqModulatorModel m;
  m.mean_depth = mean_depth;
  m.imbalance = std::isinf(suppression_db) ? 0.0 : mean_depth * std::pow(10.0, -suppression_db / 20.0);
  return m;
}

OpticalField iq_modulate(const Baseband& drive, const IqModulatorModel& model,
                         const OpticalField& carrier) {
  model.validate();
  if (carrier.size() != drive.samples.size())
    throw ConfigError("iq_modulate: carrier and drive lengths differ");
  const Complex gp = model.positive_gain();
  const Complex gm = model.mirror_gain();
  OpticalField out;
  out.sample_rate = drive.sample_rate;
  out.start_time = carrier.start_time;
  out.samples.resize(drive.samples.size());
  for (std::size_t k = 0; k < out.samples.size(); ++k) {
    const Complex d = drive.samples[k];
    out.samples[k] = carrier.samples[k] * (gp * d + gm * std::conj(d));
  }
  return out;
}

OpticalField iq_modulate(const Baseband& drive, const IqModulatorModel& model) {
  OpticalField carrier;
  carrier.sample_rate = drive.sample_rate;
  carrier.samples.assign(drive.samples.size(), Complex{1.0, 0.0});
  return iq_modulate(drive, model, carrier);
}

double sideband_ratio(const IqModulatorModel& model) {
  const double p_plus = std::norm(model.positive_gain());
  const double p_minus = std::norm(model.mirror_gain());
  return std::sqrt(p_plus / (p_plus + p_minus));
}

}  // namespace dqan::encoder
