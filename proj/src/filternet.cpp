// SPDX-License-Identifier: Apache-2.0
#include "dqan/filternet.hpp"

#include <cmath>
#include <sstream>

#include "dqan/fft.hpp"

namespace dqan::filternet {

double lorentzian_transmission(const FilterSpec& spec, double f) {
  const double h = spec.linewidth_hz / 2.0;
  const double df = f - spec.center_hz;
  return h * h / (df * df + h * h);
}

double lorentzian_density(const FilterSpec& spec, double f) {
  const double h = spec.linewidth_hz / 2.0;
  const double df = f - spec.center_hz;
  return h / (kPi * (df * df + h * h));
}

double band_integral(const FilterSpec& spec, double a, double b) {
  const double h = spec.linewidth_hz / 2.0;
  return h * (std::atan((b - spec.center_hz) / h) - std::atan((a - spec.center_hz) / h));
}

namespace {

void check_bands(const FilterSpec& spec, const encoder::SidemodePlan& plan, std::size_t j) {
  if (j >= plan.n_users) throw ConfigError("crosstalk_fractions: user index out of range");
  if (!(spec.linewidth_hz > 0.0)) throw ConfigError("crosstalk_fractions: linewidth must be positive");
  if (!(plan.signal_bandwidth_hz > 0.0) || plan.signal_bandwidth_hz > plan.spacing_hz)
    throw ConfigError("crosstalk_fractions: integration bands overlap (signal bandwidth exceeds spacing)");
}

template <typename Integral>
Crosstalk ratios(const FilterSpec& spec, const encoder::SidemodePlan& plan, std::size_t j,
                 Integral integral) {
  check_bands(spec, plan, j);
  const double half = plan.signal_bandwidth_hz / 2.0;
  const double fj = plan.center_frequency(j);
  const double own = integral(fj - half, fj + half);
  Crosstalk c;
  if (j > 0) {
    const double f = plan.center_frequency(j - 1);
    c.lower = spec.residual_reflectivity * integral(f - half, f + half) / own;
  }
  if (j + 1 < plan.n_users) {
    const double f = plan.center_frequency(j + 1);
    c.upper = integral(f - half, f + half) / own;
  }
  return c;
}

}  // namespace

Crosstalk crosstalk_fractions(const FilterSpec& spec, const encoder::SidemodePlan& plan, std::size_t j) {
  return ratios(spec, plan, j, [&](double a, double b) { return band_integral(spec, a, b); });
}

Crosstalk crosstalk_fractions_density(const FilterSpec& spec, const encoder::SidemodePlan& plan,
                                      std::size_t j) {
  const double h = spec.linewidth_hz / 2.0;
  return ratios(spec, plan, j, [&](double a, double b) {
    return (std::atan((b - spec.center_hz) / h) - std::atan((a - spec.center_hz) / h)) / kPi;
  });
}

std::pair<double, double> port_transfer(const FilterSpec& spec, double f) {
  const double t = lorentzian_transmission(spec, f);
  const double drop = (1.0 - spec.residual_reflectivity) * t;
  const bool in_band = std::abs(f - spec.center_hz) <= spec.drop_bandwidth_hz / 2.0;
  return {drop, in_band ? spec.residual_reflectivity : 1.0 - t};
}

DropResult drop_sidemode(const OpticalField& input, const FilterSpec& spec) {
  if (!(input.sample_rate > 2.0 * std::abs(spec.center_hz)))
    throw ConfigError("drop_sidemode: sample rate does not cover the filter centre");
  const std::size_t n = input.size();
  auto spectrum = fft::forward(input.samples);
  ComplexVec d(n), r(n);
  for (std::size_t k = 0; k < n; ++k) {
    const auto [pd, pr] = port_transfer(spec, fft::bin_frequency(k, n, input.sample_rate));
    d[k] = spectrum[k] * std::sqrt(pd);
    r[k] = spectrum[k] * std::sqrt(pr);
  }
  DropResult out;
  out.dropped = input;
  out.residual = input;
  out.dropped.samples = fft::inverse(d);
  out.residual.samples = fft::inverse(r);
  return out;
}

DesignReport validate_design(const FilterSpec& spec, const encoder::SidemodePlan& plan) {
  DesignReport rep;
  const double span = static_cast<double>(plan.n_users - 1) * plan.spacing_hz + plan.signal_bandwidth_hz;
  const double fsr = spec.free_spectral_range();
  rep.fsr.name = "fsr_exceeds_sidemode_span";
  rep.fsr.margin_hz = fsr - span;
  rep.fsr.pass = fsr > span;
  {
    std::ostringstream s;
    s << "FSR " << fsr << " Hz vs occupied span " << span << " Hz";
    rep.fsr.detail = s.str();
  }
  const double dv = spec.linewidth_hz;
  rep.linewidth.name = "linewidth_between_bandwidth_and_spacing";
  rep.linewidth.margin_hz = std::min(dv - plan.signal_bandwidth_hz, plan.spacing_hz - dv);
  // Lower edge inclusive: the reference cavity matches the allocated band exactly.
  rep.linewidth.pass = dv >= plan.signal_bandwidth_hz && dv < plan.spacing_hz;
  {
    std::ostringstream s;
    s << "linewidth " << dv << " Hz must lie in [" << plan.signal_bandwidth_hz << ", " << plan.spacing_hz
      << ") Hz";
    rep.linewidth.detail = s.str();
  }
  return rep;
}

std::vector<FilterSpec> make_bank(const encoder::SidemodePlan& plan, double linewidth_hz, double fsr_hz,
                                  double residual_reflectivity, double core_index) {
  std::vector<FilterSpec> bank(plan.n_users);
  for (std::size_t j = 0; j < plan.n_users; ++j) {
    auto& f = bank[j];
    f.center_hz = plan.center_frequency(j);
    f.linewidth_hz = linewidth_hz;
    f.core_index = core_index;
    f.cavity_length_m = FilterSpec::length_for_fsr(fsr_hz, core_index);
    f.residual_reflectivity = residual_reflectivity;
    f.drop_bandwidth_hz = plan.signal_bandwidth_hz;
  }
  return bank;
}

std::vector<OpticalField> cascade(const OpticalField& input, const std::vector<FilterSpec>& bank,
                                  OpticalField* residual_out) {
  std::vector<OpticalField> drops;
  drops.reserve(bank.size());
  OpticalField through = input;
  for (const auto& spec : bank) {
    auto res = drop_sidemode(through, spec);
    drops.push_back(std::move(res.dropped));
    through = std::move(res.residual);
  }
  if (residual_out) *residual_out = std::move(through);
  return drops;
}

}  // namespace dqan::filternet
