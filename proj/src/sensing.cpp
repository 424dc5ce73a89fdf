// SPDX-License-Identifier: Apache-2.0
#include "dqan/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dqan/fft.hpp"
#include "dqan/parallel.hpp"

namespace dqan::sensing {

int lag_bound(double length_km, double core_index, double rate) {
  return static_cast<int>(std::ceil(length_km * 1e3 * core_index / kSpeedOfLight * rate)) + 2;
}

CorrelationResult correlate_delay(const PhaseTrace& server, const PhaseTrace& user, int max_lag) {
  if (server.sample_rate != user.sample_rate || !(server.sample_rate > 0.0))
    throw InputError("correlate_delay: traces must share a positive sample rate");
  if (server.size() != user.size() || server.size() < 3)
    throw InputError("correlate_delay: traces must have equal length >= 3");
  if (max_lag < 1) throw InputError("correlate_delay: max_lag must be >= 1");
  const std::size_t n = server.size();
  const auto lag_cap = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(max_lag), n - 2));

  const double ms = std::accumulate(server.samples.begin(), server.samples.end(), 0.0) / static_cast<double>(n);
  const double mu = std::accumulate(user.samples.begin(), user.samples.end(), 0.0) / static_cast<double>(n);
  const std::size_t m = fft::good_size(n + static_cast<std::size_t>(lag_cap) + 1);
  ComplexVec a(m, Complex{}), b(m, Complex{});
  double es = 0.0, eu = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double s = server.samples[k] - ms;
    const double u = user.samples[k] - mu;
    a[k] = s;
    b[k] = u;
    es += s * s;
    eu += u * u;
  }
  if (!(es > 0.0) || !(eu > 0.0)) throw NoDetection("correlate_delay: a trace has no variance", 0.0);
  fft::forward_inplace(a);
  fft::forward_inplace(b);
  for (std::size_t i = 0; i < m; ++i) a[i] = std::conj(a[i]) * b[i];
  fft::inverse_inplace(a);
  const double norm = std::sqrt(es * eu);
  auto c_at = [&](int lag) {
    const std::size_t idx = lag >= 0 ? static_cast<std::size_t>(lag) : m - static_cast<std::size_t>(-lag);
    return a[idx].real() / norm;
  };
  int best = 0;
  double peak = -2.0;
  for (int lag = -lag_cap; lag <= lag_cap; ++lag) {
    const double v = c_at(lag);
    if (v > peak) {
      peak = v;
      best = lag;
    }
  }
  if (peak < kDetectionThreshold)
    throw NoDetection("correlate_delay: correlation peak below detection threshold", peak);
  CorrelationResult r;
  r.peak = peak;
  r.max_lag = lag_cap;
  double lag = best;
  if (best > -lag_cap && best < lag_cap) {
    const double y0 = c_at(best - 1), y1 = peak, y2 = c_at(best + 1);
    const double den = y0 - 2.0 * y1 + y2;
    if (den < 0.0) {
      lag += std::clamp(0.5 * (y0 - y2) / den, -0.5, 0.5);
      r.refined = true;
    }
  }
  r.lag_samples = lag;
  r.delta_t = lag / server.sample_rate;
  return r;
}

LocalizationResult locate(const CorrelationResult& corr, double length_km, double core_index) {
  if (!(length_km > 0.0) || !(core_index >= 1.0)) throw InputError("locate: invalid link geometry");
  LocalizationResult r;
  const double path_km = kSpeedOfLight * corr.delta_t / core_index / 1e3;
  double est = 0.5 * (length_km - path_km);
  if (est < 0.0 || est > length_km) {
    r.clamped = true;
    est = std::clamp(est, 0.0, length_km);
  }
  r.estimate_km = est;
  return r;
}

double band_noise_variance(const SensingScenario& sc) {
  const auto d = dsp::design_filter(sc.band, sc.tier.rate);
  const double f1 = d.low_hz, f2 = d.high_hz;
  const double lasers = (sc.noise.server_linewidth_hz + sc.noise.lo_linewidth_hz) / kPi * (1.0 / f1 - 1.0 / f2);
  const double snr = std::isfinite(sc.tier.pilot_snr_db) ? db_to_linear(sc.tier.pilot_snr_db) : 0.0;
  const double white = snr > 0.0 ? 1.0 / (2.0 * snr) * 2.0 * (f2 - f1) / sc.tier.rate : 0.0;
  return lasers + white + sc.noise.system_phase_psd * (f2 - f1);
}

void set_band_snr(SensingScenario& sc, double snr_db) {
  sc.event.amplitude_rad = std::sqrt(2.0 * db_to_linear(snr_db) * band_noise_variance(sc));
}

SensingScenario reference_scenario(dsp::FilterPurpose band, double position_km, double snr_db) {
  SensingScenario sc;
  sc.band = band;
  sc.event.position_km = position_km;
  sc.event.kind = channel::VibrationKind::kBurst;
  switch (band) {
    case dsp::FilterPurpose::kVib100Hz: sc.event.frequency_hz = 100.0; break;
    case dsp::FilterPurpose::kVib1kHz: sc.event.frequency_hz = 1e3; break;
    case dsp::FilterPurpose::kVib10kHz: sc.event.frequency_hz = 1e4; break;
    case dsp::FilterPurpose::kQkdBand: throw ConfigError("reference_scenario: qkd-band is not a vibration band");
  }
  constexpr double kCycles = 10.0;
  sc.event.duration_s = kCycles / sc.event.frequency_hz;
  sc.event.start_s = 0.4;
  sc.gate_s = sc.event.duration_s;
  set_band_snr(sc, snr_db);
  return sc;
}

std::pair<std::size_t, std::size_t> energy_gate(const RealVec& x, std::size_t window) {
  const std::size_t n = x.size();
  if (window == 0 || window >= n) return {0, n};
  RealVec csum(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) csum[k + 1] = csum[k] + x[k] * x[k];
  std::size_t best = 0;
  double best_e = -1.0;
  for (std::size_t s = 0; s + window <= n; ++s) {
    const double e = csum[s + window] - csum[s];
    if (e > best_e) {
      best_e = e;
      best = s;
    }
  }
  return {best, window};
}

TrialRecord run_localization(const SensingScenario& sc, std::uint64_t seed, std::size_t trial) {
  TrialRecord rec;
  rec.trial = trial;
  rec.truth_km = sc.event.position_km;
  const auto traces = channel::simulate_phase_traces(sc.link, sc.noise, {sc.event}, sc.tier, seed);
  auto user = dsp::estimate_phase(traces.user_pilot, TraceOrigin::kPilot);
  auto server = dsp::estimate_phase(traces.server_probe, TraceOrigin::kProbe);
  const auto design = dsp::design_filter(sc.band, sc.tier.rate);
  user = dsp::apply_zero_phase(design, user);
  server = dsp::apply_zero_phase(design, server);
  const int max_lag = lag_bound(sc.link.length_km, sc.link.core_index, sc.tier.rate);

  if (sc.gate_s > 0.0) {
    const auto core = static_cast<std::size_t>(std::llround(sc.gate_s * sc.tier.rate));
    const auto [s0, len] = energy_gate(server.samples, core);
    const auto pad = static_cast<std::size_t>(max_lag) + 2;
    const std::size_t lo = s0 > pad ? s0 - pad : 0;
    const std::size_t hi = std::min(server.size(), s0 + len + pad);
    auto cut = [&](PhaseTrace& t) {
      t.samples = RealVec(t.samples.begin() + static_cast<std::ptrdiff_t>(lo),
                          t.samples.begin() + static_cast<std::ptrdiff_t>(hi));
      t.start_time += static_cast<double>(lo) / t.sample_rate;
    };
    cut(user);
    cut(server);
  }
  try {
    const auto corr = correlate_delay(server, user, max_lag);
    const auto loc = locate(corr, sc.link.length_km, sc.link.core_index);
    rec.detected = true;
    rec.peak = corr.peak;
    rec.estimate_km = loc.estimate_km;
    rec.error_m = (loc.estimate_km - rec.truth_km) * 1e3;
  } catch (const NoDetection& e) {
    rec.detected = false;
    rec.peak = e.peak();
  }
  return rec;
}

ResolutionSummary resolution_trial(const SensingScenario& sc, std::size_t n_runs, std::uint64_t seed,
                                   unsigned threads) {
  if (n_runs == 0) throw ConfigError("resolution_trial: n_runs must be >= 1");
  ResolutionSummary out;
  out.trials.resize(n_runs);
  parallel_for(n_runs, threads, [&](std::size_t i) {
    out.trials[i] = run_localization(sc, derive_seed(seed, "sensing.trial", i), i);
  });
  RealVec err;
  for (const auto& t : out.trials) {
    if (t.detected) err.push_back(t.error_m);
  }
  out.detected = err.size();
  out.censored = n_runs - err.size();
  if (err.empty()) return out;
  const double nd = static_cast<double>(err.size());
  out.mean_error_m = std::accumulate(err.begin(), err.end(), 0.0) / nd;
  double sq = 0.0;
  for (double e : err) sq += e * e;
  out.rms_error_m = std::sqrt(sq / nd);
  RealVec ab(err.size());
  std::transform(err.begin(), err.end(), ab.begin(), [](double e) { return std::abs(e); });
  std::sort(ab.begin(), ab.end());
  const auto i95 = static_cast<std::size_t>(std::ceil(0.95 * nd)) - 1;
  out.p95_abs_error_m = ab[std::min(i95, ab.size() - 1)];
  RealVec sorted = err;
  std::sort(sorted.begin(), sorted.end());
  const double med = sorted[sorted.size() / 2];
  RealVec dev(sorted.size());
  std::transform(sorted.begin(), sorted.end(), dev.begin(), [&](double e) { return std::abs(e - med); });
  std::sort(dev.begin(), dev.end());
  const double mad = dev[dev.size() / 2];
  out.fwhm_m = 2.0 * std::sqrt(2.0 * std::log(2.0)) * 1.4826 * mad;
  double var = 0.0;
  for (double e : err) var += (e - out.mean_error_m) * (e - out.mean_error_m);
  var = err.size() > 1 ? var / (nd - 1.0) : 0.0;
  out.separation_m = 2.0 * 1.96 * std::sqrt(var);
  return out;
}

}  // namespace dqan::sensing
