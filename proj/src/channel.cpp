// SPDX-License-Identifier: Apache-2.0
#include "dqan/channel.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace dqan::channel {

double ChannelSpec::transmittance() const {
  return std::pow(10.0, -loss_db_per_km * length_km / 10.0);
}

double ChannelSpec::delay_s() const { return delay_to(length_km); }

double ChannelSpec::delay_to(double position_km) const {
  return position_km * 1e3 * core_index / kSpeedOfLight;
}

void ChannelSpec::validate() const {
  if (!(length_km >= 0.0) || !std::isfinite(length_km)) throw ConfigError("channel: length must be >= 0 km");
  if (!(loss_db_per_km >= 0.0)) throw ConfigError("channel: loss must be >= 0 dB/km");
  if (!(core_index >= 1.0)) throw ConfigError("channel: core index must be >= 1");
}

double VibrationEvent::phase(double t) const {
  const double u = t - start_s;
  if (u < 0.0 || u > duration_s) return 0.0;
  const double carrier = std::sin(2.0 * kPi * frequency_hz * u);
  if (kind == VibrationKind::kSinusoid) return amplitude_rad * carrier;
  const double env = 0.5 * (1.0 - std::cos(2.0 * kPi * u / duration_s));
  return amplitude_rad * env * carrier;
}

void VibrationEvent::validate(double trace_rate, double length_km) const {
  if (!(amplitude_rad >= 0.0)) throw ConfigError("vibration: amplitude must be >= 0");
  if (!(frequency_hz > 0.0)) throw ConfigError("vibration: frequency must be positive");
  if (!(frequency_hz < trace_rate / 2.0))
    throw ConfigError("vibration: frequency lies above the phase-trace Nyquist rate");
  if (!(duration_s > 0.0)) throw ConfigError("vibration: duration must be positive");
  if (!(position_km >= 0.0 && position_km <= length_km))
    throw ConfigError("vibration: position must lie on the link");
}

void NoiseSpec::validate() const {
  std::ostringstream s;
  if (!(server_linewidth_hz >= 0.0)) s << "server linewidth < 0; ";
  if (!(lo_linewidth_hz >= 0.0)) s << "LO linewidth < 0; ";
  if (!(system_phase_psd >= 0.0)) s << "system phase PSD < 0; ";
  if (!(excess_noise >= 0.0)) s << "excess noise < 0; ";
  if (!(eps_freq >= 0.0)) s << "eps_freq < 0; ";
  if (!(eps_filt >= 0.0)) s << "eps_filt < 0; ";
  if (std::isfinite(probe_power_dbm) && probe_power_dbm > 0.0) s << "probe power above 0 dBm; ";
  const auto m = s.str();
  if (!m.empty()) throw ConfigError("noise: " + m.substr(0, m.size() - 2));
}

namespace {

RealVec wiener(double linewidth_hz, std::size_t n, double rate, std::mt19937_64& rng) {
  RealVec phi(n, 0.0);
  if (linewidth_hz <= 0.0 || n == 0) return phi;
  std::normal_distribution<double> step(0.0, std::sqrt(2.0 * kPi * linewidth_hz / rate));
  for (std::size_t k = 1; k < n; ++k) phi[k] = phi[k - 1] + step(rng);
  return phi;
}

double sample_linear(const RealVec& x, double pos) {
  if (x.empty()) return 0.0;
  if (pos <= 0.0) return x.front();
  const double last = static_cast<double>(x.size() - 1);
  if (pos >= last) return x.back();
  const auto i = static_cast<std::size_t>(pos);
  const double f = pos - static_cast<double>(i);
  return x[i] * (1.0 - f) + x[i + 1] * f;
}

}  // namespace

OpticalField propagate(const OpticalField& field, const ChannelSpec& spec, const NoiseSpec& noise,
                       const std::vector<VibrationEvent>& events, Direction direction, std::uint64_t seed) {
  spec.validate();
  noise.validate();
  if (!(field.sample_rate > 0.0)) throw ConfigError("propagate: field has no sample rate");
  for (const auto& ev : events) ev.validate(field.sample_rate, spec.length_km);

  const double T = spec.transmittance();
  const double delay = spec.delay_s();
  const std::size_t n = field.size();
  OpticalField out = field;
  out.start_time = field.start_time + delay;

  std::mt19937_64 laser_rng(derive_seed(seed, direction == Direction::kForward ? "laser.fwd" : "laser.bwd"));
  std::mt19937_64 sys_rng(derive_seed(seed, "sys_phase"));
  std::mt19937_64 eps_rng(derive_seed(seed, "excess_noise"));
  const double laser_lw = direction == Direction::kForward ? noise.server_linewidth_hz : noise.lo_linewidth_hz;
  const RealVec walk = wiener(laser_lw, n, field.sample_rate, laser_rng);

  const double sys_sigma = std::sqrt(noise.system_phase_psd * field.sample_rate / 2.0);
  std::normal_distribution<double> sys(0.0, 1.0);
  const double eps_sigma = std::sqrt(T * noise.excess_noise / 2.0 * field.sample_rate / 2.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const double amp = std::sqrt(T);
  for (std::size_t k = 0; k < n; ++k) {
    const double t_out = out.time_at(k);
    double phi = walk[k];
    for (const auto& ev : events) {
      const double from_point_km =
          direction == Direction::kForward ? spec.length_km - ev.position_km : ev.position_km;
      phi += ev.phase(t_out - spec.delay_to(from_point_km));
    }
    if (sys_sigma > 0.0) phi += sys_sigma * sys(sys_rng);
    Complex v = field.samples[k] * amp * std::polar(1.0, phi);
    if (eps_sigma > 0.0) v += Complex{eps_sigma * gauss(eps_rng), eps_sigma * gauss(eps_rng)};
    out.samples[k] = v;
  }
  return out;
}

PhaseTrace laser_phase_walk(double linewidth_hz, double duration_s, double rate, std::uint64_t seed) {
  if (!(linewidth_hz >= 0.0)) throw ConfigError("laser_phase_walk: linewidth must be >= 0");
  if (!(rate > 0.0) || !(duration_s > 0.0)) throw ConfigError("laser_phase_walk: rate and duration must be positive");
  std::mt19937_64 rng(derive_seed(seed, "laser_walk"));
  PhaseTrace tr;
  tr.sample_rate = rate;
  tr.origin = TraceOrigin::kSynthetic;
  tr.samples = wiener(linewidth_hz, static_cast<std::size_t>(std::llround(duration_s * rate)), rate, rng);
  return tr;
}

double raman_noise(double probe_power_dbm) {
  if (!std::isfinite(probe_power_dbm)) {
    if (probe_power_dbm < 0.0) return 0.0;
    throw ConfigError("raman_noise: probe power must be finite or -inf");
  }
  return kRamanAnchorSnu * std::pow(10.0, (probe_power_dbm - kRamanAnchorDbm) / 10.0);
}

ExcessNoiseBudget excess_noise_budget(const NoiseSpec& noise, double measured_eps_cv) {
  if (!(measured_eps_cv >= 0.0)) throw InputError("excess_noise_budget: components must be >= 0");
  noise.validate();
  ExcessNoiseBudget b;
  b.cv_qkd = measured_eps_cv;
  b.sasrs = noise.probe_on() ? raman_noise(noise.probe_power_dbm) : 0.0;
  b.freq = noise.eps_freq;
  b.filt = noise.eps_filt;
  return b;
}

TracePair simulate_phase_traces(const ChannelSpec& spec, const NoiseSpec& noise,
                                const std::vector<VibrationEvent>& events, const TraceTierSpec& tier,
                                std::uint64_t seed) {
  spec.validate();
  noise.validate();
  if (!(tier.rate > 0.0) || !(tier.duration_s > 0.0)) throw ConfigError("trace tier: rate and duration must be positive");
  for (const auto& ev : events) ev.validate(tier.rate, spec.length_km);

  const auto n = static_cast<std::size_t>(std::llround(tier.duration_s * tier.rate));
  const double tau = spec.delay_s();
  // Walks start early enough to be read at t - tau.
  const auto lead = static_cast<std::size_t>(std::ceil(tau * tier.rate)) + 2;
  std::mt19937_64 rng_s(derive_seed(seed, "trace.laser", 0));
  std::mt19937_64 rng_u(derive_seed(seed, "trace.laser", 1));
  const RealVec phi_s = wiener(noise.server_linewidth_hz, n + lead, tier.rate, rng_s);
  const RealVec phi_u = wiener(noise.lo_linewidth_hz, n + lead, tier.rate, rng_u);

  std::mt19937_64 rng_sys_u(derive_seed(seed, "trace.sys", 1));
  std::mt19937_64 rng_sys_s(derive_seed(seed, "trace.sys", 0));
  std::mt19937_64 rng_n_u(derive_seed(seed, "trace.awgn", 1));
  std::mt19937_64 rng_n_s(derive_seed(seed, "trace.awgn", 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sys_sigma = std::sqrt(noise.system_phase_psd * tier.rate / 2.0);
  auto awgn_sigma = [](double snr_db) {
    return std::isfinite(snr_db) ? std::sqrt(0.5 / db_to_linear(snr_db)) : 0.0;
  };
  const double sig_u = awgn_sigma(tier.pilot_snr_db);
  const double sig_s = awgn_sigma(tier.probe_snr_db);

  TracePair out;
  for (Baseband* b : {&out.user_pilot, &out.server_probe}) {
    b->sample_rate = tier.rate;
    b->samples.resize(n);
  }
  const double lead_d = static_cast<double>(lead);
  const double tau_samples = tau * tier.rate;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / tier.rate;
    const double here = lead_d + static_cast<double>(k);
    double vib_u = 0.0, vib_s = 0.0;
    for (const auto& ev : events) {
      vib_u += ev.phase(t - spec.delay_to(spec.length_km - ev.position_km));
      vib_s += ev.phase(t - spec.delay_to(ev.position_km));
    }
    double pu = 2.0 * kPi * tier.residual_offset_hz * t + phi_u[lead + k] -
                sample_linear(phi_s, here - tau_samples) + vib_u;
    double ps = -2.0 * kPi * tier.residual_offset_hz * t + phi_s[lead + k] -
                sample_linear(phi_u, here - tau_samples) + vib_s;
    if (sys_sigma > 0.0) {
      pu += sys_sigma * gauss(rng_sys_u);
      ps += sys_sigma * gauss(rng_sys_s);
    }
    Complex zu = std::polar(1.0, pu);
    Complex zs = std::polar(1.0, ps);
    if (sig_u > 0.0) zu += Complex{sig_u * gauss(rng_n_u), sig_u * gauss(rng_n_u)};
    if (sig_s > 0.0) zs += Complex{sig_s * gauss(rng_n_s), sig_s * gauss(rng_n_s)};
    out.user_pilot.samples[k] = zu;
    out.server_probe.samples[k] = zs;
  }
  return out;
}

}  // namespace dqan::channel
