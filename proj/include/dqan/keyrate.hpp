// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dqan/common.hpp"
#include "dqan/dsp.hpp"

namespace dqan::keyrate {

/// Excess noise is referred to the channel input: a coherent state of
/// amplitude alpha arrives with mean sqrt(T) alpha and quadrature variance
/// 1 + T eps (SNU, before detection).
struct ChannelEstimate {
  double transmittance = 1.0;
  double excess_noise = 0.0;
  double modulation_variance = 1.17;
  std::size_t user = 0;
  bool excess_noise_clamped = false;
  bool transmittance_clamped = false;
  std::size_t slots = 0;
  void validate() const;
};

struct KeyRateParams {
  double rate_baud = 50e6;
  double beta = 0.95;
  double efficiency = 0.51;
  double electronic_noise = 0.19;
  double p_pass = 1.0;
  /// Leakage per symbol. NaN means "derive from the QPSK ensemble and beta".
  double delta_ec = std::numeric_limits<double>::quiet_NaN();
  int fock_cutoff = 12;
  int max_iterations = 500;
  double gap_tolerance = 1e-5;
  void validate() const;
};

struct CorrectionInputs {
  double g1 = 1.0;
  double s_lower = 0.0;
  double s_upper = 0.0;
  void validate() const;
};

enum class Method { kGaussian, kDmSdp, kPlob };
std::string method_name(Method m);

struct KeyRateReport {
  Method method = Method::kGaussian;
  std::size_t user = 0;
  double bits_per_symbol = 0.0;
  double bits_per_second = 0.0;
  bool clamped = false;   // a negative raw rate was reported as 0
  bool infinite = false;  // PLOB at T = 1
  // Solver diagnostics (dm-sdp only).
  int iterations = 0;
  double gap = 0.0;
  double objective = 0.0;    // relative entropy at the final iterate, bits
  double lower_bound = 0.0;  // objective - gap
  double delta_ec = 0.0;
  std::vector<double> objective_history;
};

/// T from the sent/received cross moment scaled by eta, eps from the
/// residual variance. With C = <x Re a + p Im a> and A = <|a|^2>:
///   T   = C^2 / (2 eta A^2)
///   eps = 2 (V_res - 1 - v_el) / (eta T),  V_res = <(x - sqrt(2 eta T) Re a)^2> (both quadratures)
///   V_A = 2 A
/// Requires at least 1e5 slots.
ChannelEstimate estimate_channel_params(const ComplexVec& sent, const dsp::QuadratureSamples& received,
                                        const KeyRateParams& params);
inline constexpr std::size_t kMinEstimationSlots = 100000;

struct EstimateSpread {
  double transmittance_se = 0.0;
  double excess_noise_se = 0.0;
};
/// Nonparametric bootstrap over slots.
EstimateSpread bootstrap_channel_params(const ComplexVec& sent, const dsp::QuadratureSamples& received,
                                        const KeyRateParams& params, int resamples, std::uint64_t seed);

/// g = 1 / (g1 sqrt(1 - S_lower - S_upper)).
double correction_factor(const CorrectionInputs& in);

/// Holevo-bound surrogate with trusted detector noise under heterodyne detection.
KeyRateReport gaussian_keyrate(const ChannelEstimate& est, const KeyRateParams& params,
                               const CorrectionInputs& corr);

/// Holevo information between Eve and the heterodyne outcome, exposed for tests.
double gaussian_holevo(const ChannelEstimate& est, const KeyRateParams& params, double g);
double gaussian_mutual_information(const ChannelEstimate& est, const KeyRateParams& params);

/// Relative-entropy bound over truncated-Fock states consistent with the
/// corrected Gram matrix and the observed moments (conditional gradient).
KeyRateReport dm_keyrate_sdp(const ChannelEstimate& est, const KeyRateParams& params,
                             const CorrectionInputs& corr);

/// Leakage H(Z) - beta I(X;Z) for quadrant key mapping of the observed data.
double qpsk_leakage(const ChannelEstimate& est, const KeyRateParams& params);

/// -log2(1 - T). Returns +inf for T = 1.
double plob_bound(double transmittance);
KeyRateReport plob_report(double transmittance, const KeyRateParams& params);

struct Bps {
  double value = 0.0;
  bool clamped = false;
};
Bps keyrate_bps(double bits_per_symbol, const KeyRateParams& params);

// ---------------------------------------------------------------------------
// Building blocks of the relative-entropy problem, exposed for tests.
namespace detail {

using Eigen::MatrixXcd;

/// Gram matrix (l, h) -> p <alpha_h | alpha_l> of the four QPSK states g*alpha i^k.
MatrixXcd qpsk_gram(double amplitude);
/// Key-map region operators R_z (z = 0..3) on Fock levels 0..cutoff for
/// heterodyne with trusted noise n_d = (1 - eta + v_el) / eta.
std::vector<MatrixXcd> region_operators(int cutoff, double eta, double v_el);

}  // namespace detail

}  // namespace dqan::keyrate
