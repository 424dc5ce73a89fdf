// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "dqan/common.hpp"
#include "dqan/encoder.hpp"
#include "dqan/signal.hpp"

namespace dqan::filternet {

/// One fiber-cavity drop filter. Frequencies are envelope-relative.
struct FilterSpec {
  double center_hz = 100e6;
  double linewidth_hz = 100e6;  // FWHM
  double cavity_length_m = 0.05;
  double core_index = kDefaultCoreIndex;
  double residual_reflectivity = 0.227;  // R_j
  double drop_bandwidth_hz = 100e6;      // band around f0 floored at R_j on the through port

  /// c / (2 d l).
  double free_spectral_range() const { return kSpeedOfLight / (2.0 * core_index * cavity_length_m); }
  /// FSR / linewidth.
  double finesse() const { return free_spectral_range() / linewidth_hz; }
  /// Cavity length giving the requested FSR at this core index.
  static double length_for_fsr(double fsr_hz, double core_index = kDefaultCoreIndex) {
    return kSpeedOfLight / (2.0 * core_index * fsr_hz);
  }
};

struct DesignCheck {
  std::string name;
  bool pass = false;
  double margin_hz = 0.0;  // positive when satisfied
  std::string detail;
};

struct DesignReport {
  DesignCheck fsr;        // FSR wider than the occupied sidemode span
  DesignCheck linewidth;  // signal bandwidth < linewidth < spacing
  bool pass() const { return fsr.pass && linewidth.pass; }
};

/// Unit-peak Lorentzian power transmission.
double lorentzian_transmission(const FilterSpec& spec, double f);
/// Area-normalised Lorentzian, (1/pi) (dv/2) / ((f - f0)^2 + (dv/2)^2).
double lorentzian_density(const FilterSpec& spec, double f);
/// Integral of the unit-peak Lorentzian over [a, b], closed form.
double band_integral(const FilterSpec& spec, double a, double b);

struct Crosstalk {
  double lower = 0.0;  // S_{j-1}: share of the lower neighbour, scaled by R_j
  double upper = 0.0;  // S_{j+1}
};

/// Normalised leakage of the two neighbouring bands into the drop port of
/// user j's filter. Each share is the neighbour's band integral over the
/// user's own band integral; the lower neighbour is weighted by R_j because
/// it has already been dropped once upstream. Neighbours outside the plan
/// contribute 0.
Crosstalk crosstalk_fractions(const FilterSpec& spec, const encoder::SidemodePlan& plan, std::size_t j);
/// Same ratios from the area-normalised density (the normalisation cancels).
Crosstalk crosstalk_fractions_density(const FilterSpec& spec, const encoder::SidemodePlan& plan,
                                      std::size_t j);

struct DropResult {
  OpticalField dropped;
  OpticalField residual;
};

/// Drop one band. |H_drop|^2 = (1 - R) t(f) everywhere. The through port
/// carries 1 - t(f) outside the dropped band and a flat floor R inside it,
/// so a fraction R of the dropped user's power continues downstream. Both
/// ports are zero-phase and applied to the circular record by FFT. Inside the
/// band the pair is lossy except at f0.
DropResult drop_sidemode(const OpticalField& input, const FilterSpec& spec);

/// Power transfer of the two ports at frequency f.
std::pair<double, double> port_transfer(const FilterSpec& spec, double f);

DesignReport validate_design(const FilterSpec& spec, const encoder::SidemodePlan& plan);

/// One filter per user, centred on F_j, sharing linewidth/geometry/R.
std::vector<FilterSpec> make_bank(const encoder::SidemodePlan& plan, double linewidth_hz,
                                  double fsr_hz, double residual_reflectivity,
                                  double core_index = kDefaultCoreIndex);

/// Serial cascade in ascending frequency. Element j of the result is the
/// dropped port of stage j; `residual_out` receives the final residual.
std::vector<OpticalField> cascade(const OpticalField& input, const std::vector<FilterSpec>& bank,
                                  OpticalField* residual_out = nullptr);

}  // namespace dqan::filternet
