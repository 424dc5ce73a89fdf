// SPDX-License-Identifier: Apache-2.0
#include "dqan/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dqan/encoder.hpp"
#include "dqan/fft.hpp"

namespace dqan::dsp {

void DetectorSpec::validate() const {
  if (!(efficiency > 0.0 && efficiency <= 1.0)) throw ConfigError("detector: efficiency must lie in (0, 1]");
  if (!(electronic_noise >= 0.0)) throw ConfigError("detector: electronic noise must be >= 0");
  if (!(bandwidth_hz > 0.0)) throw ConfigError("detector: bandwidth must be positive");
}

namespace {

inline Complex cis_cycles(double cycles) { return std::polar(1.0, 2.0 * kPi * (cycles - std::floor(cycles))); }

}  // namespace

RealWaveform heterodyne_detect(const OpticalField& field, const LoSpec& lo, const DetectorSpec& det,
                               std::uint64_t seed, double occupied_band_hz) {
  det.validate();
  if (!(field.sample_rate > 0.0)) throw ConfigError("heterodyne_detect: field has no sample rate");
  if (occupied_band_hz > det.bandwidth_hz)
    throw ConfigError("heterodyne_detect: occupied band exceeds the detector bandwidth");
  if (std::abs(lo.offset_hz) >= field.sample_rate / 2.0)
    throw ConfigError("heterodyne_detect: LO offset outside the sampled band");
  const double fs = field.sample_rate;
  const std::size_t n = field.size();
  std::mt19937_64 lo_rng(derive_seed(seed, "lo_walk"));
  std::mt19937_64 shot_rng(derive_seed(seed, "shot"));
  std::mt19937_64 el_rng(derive_seed(seed, "electronic"));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double walk_sigma = std::sqrt(2.0 * kPi * lo.linewidth_hz / fs);
  const double shot_sigma = det.shot_noise ? std::sqrt(fs / 2.0) : 0.0;
  const double el_sigma = std::sqrt(det.electronic_noise * fs / 2.0);
  const double gain = std::sqrt(2.0 * det.efficiency);

  RealWaveform out;
  out.sample_rate = fs;
  out.start_time = field.start_time;
  out.samples.resize(n);
  double phi = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    if (k > 0 && walk_sigma > 0.0) phi += walk_sigma * gauss(lo_rng);
    const double t = field.time_at(k);
    const Complex beat = field.samples[k] * cis_cycles(-lo.offset_hz * t) * std::polar(1.0, -phi);
    double r = gain * beat.real();
    if (shot_sigma > 0.0) r += shot_sigma * gauss(shot_rng);
    if (el_sigma > 0.0) r += el_sigma * gauss(el_rng);
    out.samples[k] = r;
  }
  return out;
}

namespace {

double peak_search(const ComplexVec& x, double rate, double lo_hz, double hi_hz) {
  const std::size_t n = x.size();
  if (n < 8) throw InputError("estimate_frequency_offset: record too short");
  if (!(hi_hz > lo_hz)) throw InputError("estimate_frequency_offset: empty search band");
  ComplexVec w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
    w[k] = x[k] * hann;
  }
  fft::forward_inplace(w);
  std::vector<std::pair<double, std::size_t>> band;  // (freq, bin)
  for (std::size_t k = 0; k < n; ++k) {
    const double f = fft::bin_frequency(k, n, rate);
    if (f >= lo_hz && f <= hi_hz) band.emplace_back(f, k);
  }
  if (band.size() < 3) throw InputError("estimate_frequency_offset: search band narrower than three bins");
  std::sort(band.begin(), band.end());
  RealVec mag(band.size());
  for (std::size_t i = 0; i < band.size(); ++i) mag[i] = std::norm(w[band[i].second]);
  const auto ip = static_cast<std::size_t>(std::max_element(mag.begin(), mag.end()) - mag.begin());
  RealVec sorted = mag;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  if (!(mag[ip] > 0.0) || (median > 0.0 && linear_to_db(mag[ip] / median) < kLockThresholdDb))
    throw LockFailure("estimate_frequency_offset: no tone 20 dB above the in-band median");
  const double df = rate / static_cast<double>(n);
  const std::size_t kp = band[ip].second;
  const Complex left = w[(kp + n - 1) % n];
  const Complex right = w[(kp + 1) % n];
  const double a = std::log(std::max(std::abs(left), 1e-300));
  const double b = std::log(std::abs(w[kp]));
  const double c = std::log(std::max(std::abs(right), 1e-300));
  const double denom = a - 2.0 * b + c;
  const double delta = denom < 0.0 ? 0.5 * (a - c) / denom : 0.0;
  return band[ip].first + std::clamp(delta, -0.5, 0.5) * df;
}

}  // namespace

double estimate_frequency_offset(const RealWaveform& w, double lo_hz, double hi_hz) {
  ComplexVec x(w.samples.begin(), w.samples.end());
  return peak_search(x, w.sample_rate, lo_hz, hi_hz);
}

double estimate_frequency_offset(const Baseband& w, double lo_hz, double hi_hz) {
  return peak_search(w.samples, w.sample_rate, lo_hz, hi_hz);
}

double lowpass_response(double f, double cutoff_hz, double transition_hz) {
  const double af = std::abs(f);
  if (af <= cutoff_hz) return 1.0;
  if (transition_hz <= 0.0 || af >= cutoff_hz + transition_hz) return 0.0;
  const double c = std::cos(kPi * (af - cutoff_hz) / (2.0 * transition_hz));
  return c * c;
}

namespace {

Baseband mix_and_filter(ComplexVec x, double rate, double start, double f, double cutoff_hz,
                        double transition_hz, std::size_t decimation) {
  if (decimation == 0) throw ConfigError("downconvert: decimation must be >= 1");
  if (std::abs(f) >= rate / 2.0) throw ConfigError("downconvert: mixing frequency above Nyquist");
  if (!(cutoff_hz > 0.0)) throw ConfigError("downconvert: cutoff must be positive");
  if ((cutoff_hz + transition_hz) > rate / (2.0 * static_cast<double>(decimation)))
    throw ConfigError("downconvert: low-pass band does not fit the decimated rate");
  const std::size_t n = x.size();
  for (std::size_t k = 0; k < n; ++k)
    x[k] *= cis_cycles(-f * (start + static_cast<double>(k) / rate));
  fft::forward_inplace(x);
  for (std::size_t k = 0; k < n; ++k) x[k] *= lowpass_response(fft::bin_frequency(k, n, rate), cutoff_hz, transition_hz);
  fft::inverse_inplace(x);
  Baseband out;
  out.sample_rate = rate / static_cast<double>(decimation);
  out.start_time = start;
  out.samples.reserve(n / decimation + 1);
  for (std::size_t k = 0; k < n; k += decimation) out.samples.push_back(x[k]);
  return out;
}

}  // namespace

Baseband downconvert(const RealWaveform& w, double f, double cutoff_hz, double transition_hz,
                     std::size_t decimation) {
  ComplexVec x(w.samples.size());
  const double s2 = std::sqrt(2.0);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = s2 * w.samples[k];
  return mix_and_filter(std::move(x), w.sample_rate, w.start_time, f, cutoff_hz, transition_hz, decimation);
}

Baseband downconvert(const Baseband& w, double f, double cutoff_hz, double transition_hz,
                     std::size_t decimation) {
  return mix_and_filter(w.samples, w.sample_rate, w.start_time, f, cutoff_hz, transition_hz, decimation);
}

FilterPurpose parse_purpose(std::string_view name) {
  if (name == "vib-100Hz") return FilterPurpose::kVib100Hz;
  if (name == "vib-1kHz") return FilterPurpose::kVib1kHz;
  if (name == "vib-10kHz") return FilterPurpose::kVib10kHz;
  if (name == "qkd-band") return FilterPurpose::kQkdBand;
  throw ConfigError("unknown filter purpose '" + std::string(name) + "'");
}

std::string purpose_name(FilterPurpose p) {
  switch (p) {
    case FilterPurpose::kVib100Hz: return "vib-100Hz";
    case FilterPurpose::kVib1kHz: return "vib-1kHz";
    case FilterPurpose::kVib10kHz: return "vib-10kHz";
    case FilterPurpose::kQkdBand: return "qkd-band";
  }
  return "?";
}

Complex FilterDesign::response(double f) const {
  const Complex z1 = std::polar(1.0, -2.0 * kPi * f / rate);  // z^-1
  if (kind == FilterKind::kIirButterworth) {
    Complex h{1.0, 0.0};
    for (const auto& s : sections) {
      const Complex num = s.b[0] + z1 * (s.b[1] + z1 * s.b[2]);
      const Complex den = 1.0 + z1 * (s.a[0] + z1 * s.a[1]);
      h *= num / den;
    }
    return h;
  }
  Complex h{0.0, 0.0};
  Complex zk{1.0, 0.0};
  for (double t : taps) {
    h += t * zk;
    zk *= z1;
  }
  return h;
}

double FilterDesign::applied_magnitude(double f) const {
  const double m = std::abs(response(f));
  if (kind == FilterKind::kIirButterworth) return m * m;
  return std::pow(m, fir_stages);
}

double FilterDesign::max_pole_radius() const {
  double r = 0.0;
  for (const auto& s : sections) {
    // Roots of z^2 + a1 z + a2.
    const Complex disc = std::sqrt(Complex{s.a[0] * s.a[0] - 4.0 * s.a[1], 0.0});
    r = std::max({r, std::abs((-s.a[0] + disc) / 2.0), std::abs((-s.a[0] - disc) / 2.0)});
  }
  return r;
}

FilterDesign design_butterworth_bandpass(double rate, double low_hz, double high_hz, int order) {
  if (!(rate > 0.0) || !(low_hz > 0.0) || !(high_hz > low_hz) || !(high_hz < rate / 2.0))
    throw ConfigError("butterworth: band edges must satisfy 0 < low < high < Nyquist");
  if (order < 1) throw ConfigError("butterworth: order must be >= 1");
  FilterDesign d;
  d.kind = FilterKind::kIirButterworth;
  d.rate = rate;
  d.low_hz = low_hz;
  d.high_hz = high_hz;
  d.order = order;
  const double w1 = 2.0 * rate * std::tan(kPi * low_hz / rate);
  const double w2 = 2.0 * rate * std::tan(kPi * high_hz / rate);
  const double w0sq = w1 * w2;
  const double bw = w2 - w1;
  std::vector<Complex> zpoles;
  for (int k = 0; k < order; ++k) {
    const Complex p = std::polar(1.0, kPi * (2.0 * k + order + 1) / (2.0 * order));
    const Complex pb = p * bw;
    const Complex root = std::sqrt(pb * pb - 4.0 * w0sq);
    for (const Complex s : {(pb + root) / 2.0, (pb - root) / 2.0}) {
      const Complex z = (1.0 + s / (2.0 * rate)) / (1.0 - s / (2.0 * rate));
      if (z.imag() > 0.0) zpoles.push_back(z);
    }
  }
  for (const auto& z : zpoles) {
    Biquad b;
    b.b = {1.0, 0.0, -1.0};
    b.a = {-2.0 * z.real(), std::norm(z)};
    d.sections.push_back(b);
  }
  const double f0 = rate / kPi * std::atan(std::sqrt(w0sq) / (2.0 * rate));
  const double g = 1.0 / std::abs(d.response(f0));
  const double per = std::pow(g, 1.0 / static_cast<double>(d.sections.size()));
  for (auto& s : d.sections)
    for (auto& c : s.b) c *= per;
  return d;
}

namespace {

double blackman(std::size_t n, std::size_t len) {
  const double x = 2.0 * kPi * static_cast<double>(n) / static_cast<double>(len - 1);
  return 0.42 - 0.5 * std::cos(x) + 0.08 * std::cos(2.0 * x);
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(kPi * x) / (kPi * x); }

std::size_t blackman_length(double rate, double transition_hz) {
  auto n = static_cast<std::size_t>(std::ceil(5.5 * rate / transition_hz));
  return n | 1u;
}

}  // namespace

FilterDesign design_fir_bandpass(double rate, double low_hz, double high_hz, double transition_hz, int stages) {
  if (!(rate > 0.0) || !(low_hz - transition_hz / 2.0 > 0.0) || !(high_hz > low_hz) ||
      !(high_hz + transition_hz / 2.0 < rate / 2.0))
    throw ConfigError("fir band-pass: band edges must lie inside (0, Nyquist)");
  if (stages < 1) throw ConfigError("fir band-pass: at least one stage");
  FilterDesign d;
  d.kind = FilterKind::kFirWindowedCascade;
  d.rate = rate;
  d.low_hz = low_hz;
  d.high_hz = high_hz;
  d.fir_stages = stages;
  const std::size_t len = blackman_length(rate, transition_hz);
  const double f1 = (low_hz - transition_hz / 2.0) / rate;
  const double f2 = (high_hz + transition_hz / 2.0) / rate;
  const double mid = static_cast<double>(len - 1) / 2.0;
  d.taps.resize(len);
  for (std::size_t n = 0; n < len; ++n) {
    const double m = static_cast<double>(n) - mid;
    d.taps[n] = blackman(n, len) * (2.0 * f2 * sinc(2.0 * f2 * m) - 2.0 * f1 * sinc(2.0 * f1 * m));
  }
  const double g = std::abs(d.response(0.5 * (low_hz + high_hz)));
  for (auto& t : d.taps) t /= g;
  return d;
}

FilterDesign design_lowpass_fir(double rate, double pass_hz, double stop_hz, int stages) {
  if (!(pass_hz > 0.0) || !(stop_hz > pass_hz) || !(stop_hz < rate / 2.0))
    throw ConfigError("fir low-pass: need 0 < pass < stop < Nyquist");
  FilterDesign d;
  d.kind = FilterKind::kFirWindowedCascade;
  d.purpose = FilterPurpose::kQkdBand;
  d.rate = rate;
  d.low_hz = 0.0;
  d.high_hz = pass_hz;
  d.fir_stages = stages;
  const std::size_t len = blackman_length(rate, stop_hz - pass_hz);
  const double fc = 0.5 * (pass_hz + stop_hz) / rate;
  const double mid = static_cast<double>(len - 1) / 2.0;
  d.taps.resize(len);
  double sum = 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    d.taps[n] = blackman(n, len) * 2.0 * fc * sinc(2.0 * fc * (static_cast<double>(n) - mid));
    sum += d.taps[n];
  }
  for (auto& t : d.taps) t /= sum;
  return d;
}

FilterDesign design_filter(FilterPurpose purpose, double rate) {
  FilterDesign d;
  switch (purpose) {
    case FilterPurpose::kVib100Hz:
      d = design_butterworth_bandpass(rate, 50.0, 200.0, 4);
      break;
    case FilterPurpose::kVib1kHz:
      d = design_fir_bandpass(rate, 800.0, 1200.0, 200.0, 2);
      break;
    case FilterPurpose::kVib10kHz:
      d = design_fir_bandpass(rate, 8e3, 12e3, 2e3, 2);
      break;
    case FilterPurpose::kQkdBand: {
      const auto plan = encoder::SidemodePlan::reference();
      const double pass = (1.0 + plan.rolloff) * plan.baud / 2.0 + 2.5e6;
      d = design_lowpass_fir(rate, pass, plan.pilot_offset_hz - 10e6, 1);
      break;
    }
  }
  d.purpose = purpose;
  return d;
}

namespace {

template <typename T>
std::vector<T> sosfilt(const std::vector<Biquad>& sections, std::vector<T> x) {
  for (const auto& s : sections) {
    T z1{}, z2{};
    for (auto& v : x) {
      const T in = v;
      const T out = s.b[0] * in + z1;
      z1 = s.b[1] * in - s.a[0] * out + z2;
      z2 = s.b[2] * in - s.a[1] * out;
      v = out;
    }
  }
  return x;
}

// Odd reflection about both end samples, so a filter sees no step at the edges.
template <typename T>
std::vector<T> odd_extend(const std::vector<T>& x, std::size_t pad) {
  const std::size_t n = x.size();
  std::vector<T> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * x[0] - x[pad - i];
    ext[pad + n + i] = 2.0 * x[n - 1] - x[n - 2 - i];
  }
  std::copy(x.begin(), x.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));
  return ext;
}

template <typename T>
std::vector<T> filtfilt(const FilterDesign& d, const std::vector<T>& x) {
  const std::size_t n = x.size();
  if (n < 2) return x;
  const double r = std::min(d.max_pole_radius(), 1.0 - 1e-12);
  auto pad = static_cast<std::size_t>(std::ceil(std::log(1e-9) / std::log(r)));
  pad = std::min(pad, n - 1);
  auto ext = odd_extend(x, pad);
  ext = sosfilt(d.sections, std::move(ext));
  std::reverse(ext.begin(), ext.end());
  ext = sosfilt(d.sections, std::move(ext));
  std::reverse(ext.begin(), ext.end());
  return std::vector<T>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                        ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

ComplexVec fir_same(const FilterDesign& d, const ComplexVec& x) {
  // Stages are applied as a power of one stage's spectrum.
  const std::size_t n = x.size();
  const std::size_t len = d.taps.size();
  const auto stages = static_cast<std::size_t>(d.fir_stages);
  const std::size_t total = stages * (len - 1) + 1;
  const std::size_t m = fft::good_size(n + total - 1);
  ComplexVec a(m, Complex{}), b(m, Complex{});
  std::copy(x.begin(), x.end(), a.begin());
  for (std::size_t i = 0; i < len; ++i) b[i] = d.taps[i];
  fft::forward_inplace(a);
  fft::forward_inplace(b);
  for (std::size_t i = 0; i < m; ++i) {
    Complex h{1.0, 0.0};
    for (std::size_t s = 0; s < stages; ++s) h *= b[i];
    a[i] *= h;
  }
  fft::inverse_inplace(a);
  const std::size_t delay = (total - 1) / 2;
  return ComplexVec(a.begin() + static_cast<std::ptrdiff_t>(delay),
                    a.begin() + static_cast<std::ptrdiff_t>(delay + n));
}

ComplexVec fir_padded(const FilterDesign& d, const ComplexVec& x) {
  const std::size_t n = x.size();
  if (n < 2) return x;
  const std::size_t pad = std::min(n - 1, static_cast<std::size_t>(d.fir_stages) * d.taps.size());
  const auto y = fir_same(d, odd_extend(x, pad));
  return ComplexVec(y.begin() + static_cast<std::ptrdiff_t>(pad), y.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

}  // namespace

ComplexVec apply_zero_phase(const FilterDesign& d, const ComplexVec& x) {
  if (d.kind == FilterKind::kIirButterworth) return filtfilt(d, x);
  return fir_padded(d, x);
}

RealVec apply_zero_phase(const FilterDesign& d, const RealVec& x) {
  if (d.kind == FilterKind::kIirButterworth) return filtfilt(d, x);
  const ComplexVec y = fir_padded(d, ComplexVec(x.begin(), x.end()));
  RealVec out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = y[i].real();
  return out;
}

ComplexVec apply_zero_phase_circular(const FilterDesign& d, const ComplexVec& x) {
  if (d.kind == FilterKind::kIirButterworth)
    throw ConfigError("circular filtering needs an FIR design");
  const std::size_t n = x.size();
  const std::size_t mid = (d.taps.size() - 1) / 2;
  ComplexVec k(n, Complex{});
  for (std::size_t i = 0; i < d.taps.size(); ++i) {
    const auto shift = static_cast<std::ptrdiff_t>(i) - static_cast<std::ptrdiff_t>(mid);
    const auto nn = static_cast<std::ptrdiff_t>(n);
    k[static_cast<std::size_t>(((shift % nn) + nn) % nn)] += d.taps[i];
  }
  auto X = fft::forward(x);
  fft::forward_inplace(k);
  for (std::size_t i = 0; i < n; ++i) {
    Complex h{1.0, 0.0};
    for (int s = 0; s < d.fir_stages; ++s) h *= k[i];
    X[i] *= h;
  }
  return fft::inverse(X);
}

PhaseTrace apply_zero_phase(const FilterDesign& d, const PhaseTrace& x) {
  PhaseTrace out = x;
  out.samples = apply_zero_phase(d, x.samples);
  out.trend_slope = 0.0;
  out.trend_intercept = 0.0;
  return out;
}

PhaseTrace estimate_phase(const Baseband& pilot, TraceOrigin origin) {
  const std::size_t n = pilot.samples.size();
  if (n == 0) throw InputError("estimate_phase: empty pilot record");
  if (!(pilot.sample_rate > 0.0)) throw InputError("estimate_phase: pilot has no sample rate");
  PhaseTrace tr;
  tr.sample_rate = pilot.sample_rate;
  tr.start_time = pilot.start_time;
  tr.origin = origin;
  tr.unwrapped = true;
  tr.samples.resize(n);
  double prev = std::arg(pilot.samples[0]);
  double offset = 0.0;
  tr.samples[0] = prev;
  for (std::size_t k = 1; k < n; ++k) {
    const double a = std::arg(pilot.samples[k]);
    double d = a - prev;
    if (d > kPi) offset -= 2.0 * kPi;
    else if (d < -kPi) offset += 2.0 * kPi;
    prev = a;
    tr.samples[k] = a + offset;
    d = tr.samples[k] - tr.samples[k - 1];
    if (std::abs(d) > kPi / 2.0) ++tr.phase_slips;
  }
  // Least-squares line against absolute time.
  double st = 0.0, sp = 0.0, stt = 0.0, stp = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) / tr.sample_rate;
    st += t;
    sp += tr.samples[k];
    stt += t * t;
    stp += t * tr.samples[k];
  }
  const double nn = static_cast<double>(n);
  const double den = nn * stt - st * st;
  const double slope = den > 0.0 ? (nn * stp - st * sp) / den : 0.0;
  const double icpt_rel = (sp - slope * st) / nn;
  for (std::size_t k = 0; k < n; ++k) tr.samples[k] -= icpt_rel + slope * static_cast<double>(k) / tr.sample_rate;
  tr.trend_slope = slope;
  tr.trend_intercept = icpt_rel - slope * tr.start_time;
  return tr;
}

ComplexVec matched_filter_outputs(const Baseband& signal, const PhaseTrace& phase, const SlotTiming& timing) {
  const std::size_t n = signal.samples.size();
  const double fs = signal.sample_rate;
  if (n == 0 || !(fs > 0.0)) throw InputError("recover_quadratures: empty signal");
  if (timing.n_slots == 0 || !(timing.baud > 0.0)) throw InputError("recover_quadratures: timing has no slots");
  auto y = fft::forward(signal.samples);
  for (std::size_t k = 0; k < n; ++k) y[k] *= encoder::rrc_spectrum(fft::bin_frequency(k, n, fs), timing.baud, timing.rolloff);
  fft::inverse_inplace(y);
  const double extra = 2.0 * kPi * timing.pilot_offset_hz * timing.propagation_delay;
  ComplexVec g(timing.n_slots);
  const auto nd = static_cast<double>(n);
  for (std::size_t s = 0; s < timing.n_slots; ++s) {
    const double t = timing.first_slot_time + static_cast<double>(s) / timing.baud;
    double pos = std::fmod((t - signal.start_time) * fs, nd);
    if (pos < 0.0) pos += nd;
    const auto i0 = static_cast<std::size_t>(std::floor(pos)) % n;
    const double frac = pos - std::floor(pos);
    Complex v = y[i0];
    if (frac > 1e-9 && frac < 1.0 - 1e-9) v = y[i0] * (1.0 - frac) + y[(i0 + 1) % n] * frac;
    else if (frac >= 1.0 - 1e-9) v = y[(i0 + 1) % n];
    const double phi = phase.samples.empty() ? 0.0 : phase.raw_phase_at(t) + extra;
    g[s] = v * std::polar(1.0, -phi);
  }
  return g;
}

QuadratureSamples recover_quadratures(const Baseband& signal, const PhaseTrace& phase, const SlotTiming& timing,
                                      std::size_t user) {
  const auto g = matched_filter_outputs(signal, phase, timing);
  QuadratureSamples q;
  q.user = user;
  q.x.resize(g.size());
  q.p.resize(g.size());
  q.slot_times.resize(g.size());
  const double s2 = std::sqrt(2.0);
  for (std::size_t s = 0; s < g.size(); ++s) {
    q.x[s] = s2 * g[s].real();
    q.p[s] = s2 * g[s].imag();
    q.slot_times[s] = timing.first_slot_time + static_cast<double>(s) / timing.baud;
  }
  return q;
}

double variance(const RealVec& x) {
  if (x.size() < 2) return 0.0;
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return acc / static_cast<double>(x.size() - 1);
}

double calibrate_snu(const DetectorSpec& det, const RealVec& vacuum, const RealVec& electronic) {
  det.validate();
  if (vacuum.size() < kMinCalibrationSamples || electronic.size() < kMinCalibrationSamples)
    throw InputError("calibrate_snu: records need at least 1e5 samples");
  const double vv = variance(vacuum);
  const double ve = variance(electronic);
  if (!(vv > ve)) throw CalibrationError("calibrate_snu: electronic variance is not below vacuum variance");
  return 1.0 / std::sqrt(vv - ve);
}

QuadratureSamples simulate_heterodyne_symbols(const ComplexVec& alpha, double T, double eps,
                                              const DetectorSpec& det, std::uint64_t seed, std::size_t user) {
  det.validate();
  if (!(T > 0.0 && T <= 1.0)) throw InputError("simulate_heterodyne_symbols: T must lie in (0, 1]");
  if (!(eps >= 0.0)) throw InputError("simulate_heterodyne_symbols: eps must be >= 0");
  std::mt19937_64 rng(derive_seed(seed, "symbol_tier", user));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double mean_gain = std::sqrt(2.0 * det.efficiency * T);
  const double sigma = std::sqrt(1.0 + det.electronic_noise + det.efficiency * T * eps / 2.0);
  QuadratureSamples q;
  q.user = user;
  q.x.resize(alpha.size());
  q.p.resize(alpha.size());
  for (std::size_t s = 0; s < alpha.size(); ++s) {
    q.x[s] = mean_gain * alpha[s].real() + sigma * gauss(rng);
    q.p[s] = mean_gain * alpha[s].imag() + sigma * gauss(rng);
  }
  return q;
}

}  // namespace dqan::dsp
