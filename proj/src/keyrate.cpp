// SPDX-License-Identifier: Apache-2.0
#include "dqan/keyrate.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <random>
#include <sstream>

#include "dqan/sdp.hpp"

namespace dqan::keyrate {

using detail::MatrixXcd;
using Eigen::MatrixXd;

void ChannelEstimate::validate() const {
  std::ostringstream bad;
  if (!(transmittance > 0.0 && transmittance <= 1.0)) bad << " transmittance " << transmittance << " not in (0,1];";
  if (!(excess_noise >= 0.0) || !std::isfinite(excess_noise)) bad << " excess noise " << excess_noise << " < 0;";
  if (!(modulation_variance > 0.0) || !std::isfinite(modulation_variance))
    bad << " modulation variance " << modulation_variance << " <= 0;";
  if (!bad.str().empty()) throw InputError("channel estimate:" + bad.str());
}

void KeyRateParams::validate() const {
  std::ostringstream bad;
  if (!(rate_baud > 0.0)) bad << " rate must be > 0;";
  if (!(beta > 0.0 && beta <= 1.0)) bad << " beta not in (0,1];";
  if (!(efficiency > 0.0 && efficiency <= 1.0)) bad << " efficiency not in (0,1];";
  if (!(electronic_noise >= 0.0)) bad << " electronic noise < 0;";
  if (!(p_pass > 0.0 && p_pass <= 1.0)) bad << " p_pass not in (0,1];";
  if (!std::isnan(delta_ec) && !(delta_ec >= 0.0)) bad << " delta_ec < 0;";
  if (fock_cutoff < 8) bad << " Fock cutoff " << fock_cutoff << " < 8;";
  if (max_iterations < 1) bad << " iteration cap < 1;";
  if (!(gap_tolerance > 0.0)) bad << " gap tolerance <= 0;";
  if (!bad.str().empty()) throw ConfigError("key-rate parameters:" + bad.str());
}

void CorrectionInputs::validate() const {
  if (!(g1 > 0.0 && g1 <= 1.0)) throw ConfigError("correction: g1 must lie in (0,1]");
  if (!(s_lower >= 0.0 && s_upper >= 0.0)) throw ConfigError("correction: leakage fractions must be >= 0");
  if (!(s_lower + s_upper < 1.0)) throw ConfigError("invalid filter: adjacent leakage S_lower + S_upper >= 1");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kGaussian: return "gaussian";
    case Method::kDmSdp: return "dm-sdp";
    case Method::kPlob: return "plob";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Parameter estimation

namespace {

struct Moments {
  double A = 0.0, C = 0.0;  // <|a|^2>, <x Re a + p Im a>
};

ChannelEstimate finish_estimate(const ComplexVec& sent, const dsp::QuadratureSamples& rx,
                                const KeyRateParams& params, const std::vector<std::size_t>* idx) {
  const std::size_t n = idx ? idx->size() : sent.size();
  double A = 0.0, C = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = idx ? (*idx)[k] : k;
    A += std::norm(sent[i]);
    C += rx.x[i] * sent[i].real() + rx.p[i] * sent[i].imag();
  }
  A /= static_cast<double>(n);
  C /= static_cast<double>(n);
  if (!(A > 0.0)) throw InputError("estimate: sent amplitudes are all zero");
  if (!(C > 0.0)) throw InputError("estimate: no positive correlation between sent and received data");
  const double eta = params.efficiency;
  const double T = C * C / (2.0 * eta * A * A);
  const double k = std::sqrt(2.0 * eta * T);
  double vres = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t i = idx ? (*idx)[j] : j;
    const double dx = rx.x[i] - k * sent[i].real();
    const double dp = rx.p[i] - k * sent[i].imag();
    vres += dx * dx + dp * dp;
  }
  vres /= 2.0 * static_cast<double>(n);
  ChannelEstimate e;
  e.user = rx.user;
  e.slots = n;
  e.modulation_variance = 2.0 * A;
  e.transmittance = T;
  e.excess_noise = 2.0 * (vres - 1.0 - params.electronic_noise) / (eta * T);
  return e;
}

void check_frame(const ComplexVec& sent, const dsp::QuadratureSamples& rx) {
  if (rx.x.size() != sent.size() || rx.p.size() != sent.size())
    throw InputError("estimate: sent and received frames differ in length");
  if (sent.size() < kMinEstimationSlots)
    throw InputError("estimate: need at least 1e5 slots, got " + std::to_string(sent.size()));
}

}  // namespace

ChannelEstimate estimate_channel_params(const ComplexVec& sent, const dsp::QuadratureSamples& received,
                                        const KeyRateParams& params) {
  params.validate();
  check_frame(sent, received);
  ChannelEstimate e = finish_estimate(sent, received, params, nullptr);
  if (e.excess_noise < 0.0) {
    e.excess_noise = 0.0;
    e.excess_noise_clamped = true;
  }
  if (e.transmittance > 1.0) {
    e.transmittance = 1.0;
    e.transmittance_clamped = true;
  }
  return e;
}

EstimateSpread bootstrap_channel_params(const ComplexVec& sent, const dsp::QuadratureSamples& received,
                                        const KeyRateParams& params, int resamples, std::uint64_t seed) {
  params.validate();
  check_frame(sent, received);
  if (resamples < 2) throw InputError("bootstrap: need at least 2 resamples");
  std::mt19937_64 rng(derive_seed(seed, "keyrate.bootstrap", received.user));
  std::uniform_int_distribution<std::size_t> pick(0, sent.size() - 1);
  std::vector<std::size_t> idx(sent.size());
  double sT = 0, sT2 = 0, sE = 0, sE2 = 0;
  for (int b = 0; b < resamples; ++b) {
    for (auto& i : idx) i = pick(rng);
    const ChannelEstimate e = finish_estimate(sent, received, params, &idx);
    sT += e.transmittance;
    sT2 += e.transmittance * e.transmittance;
    sE += e.excess_noise;
    sE2 += e.excess_noise * e.excess_noise;
  }
  const double n = resamples;
  EstimateSpread s;
  s.transmittance_se = std::sqrt(std::max(0.0, (sT2 - sT * sT / n) / (n - 1.0)));
  s.excess_noise_se = std::sqrt(std::max(0.0, (sE2 - sE * sE / n) / (n - 1.0)));
  return s;
}

double correction_factor(const CorrectionInputs& in) {
  in.validate();
  return 1.0 / (in.g1 * std::sqrt(1.0 - in.s_lower - in.s_upper));
}

// ---------------------------------------------------------------------------
// Gaussian surrogate

namespace {

double g_entropy(double nu) {
  const double x = 0.5 * (nu - 1.0);
  if (x <= 1e-15) return 0.0;
  return (x + 1.0) * std::log2(x + 1.0) - x * std::log2(x);
}

std::vector<double> symplectic_eigenvalues(const MatrixXd& gamma) {
  const auto n = gamma.rows();
  MatrixXd omega = MatrixXd::Zero(n, n);
  for (Eigen::Index k = 0; k < n; k += 2) {
    omega(k, k + 1) = 1.0;
    omega(k + 1, k) = -1.0;
  }
  Eigen::EigenSolver<MatrixXd> es(omega * gamma, false);
  std::vector<double> v;
  for (Eigen::Index k = 0; k < n; ++k) v.push_back(std::abs(es.eigenvalues()(k)));
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (std::size_t k = 0; k < v.size(); k += 2) out.push_back(0.5 * (v[k] + v[k + 1]));
  return out;
}

double vn_entropy(const MatrixXd& gamma) {
  double s = 0.0;
  for (double nu : symplectic_eigenvalues(gamma)) {
    if (nu < 1.0 - 1e-9) throw InputError("gaussian: unphysical covariance (symplectic eigenvalue " +
                                          std::to_string(nu) + " < 1)");
    s += g_entropy(nu);
  }
  return s;
}

MatrixXd block(double a, double b, double c) {
  MatrixXd m = MatrixXd::Zero(4, 4);
  m(0, 0) = m(1, 1) = a;
  m(2, 2) = m(3, 3) = b;
  m(0, 2) = m(2, 0) = c;
  m(1, 3) = m(3, 1) = -c;
  return m;
}

}  // namespace

double gaussian_mutual_information(const ChannelEstimate& est, const KeyRateParams& params) {
  const double eta = params.efficiency, T = est.transmittance, eps = est.excess_noise;
  const double vel = params.electronic_noise;
  return std::log2((eta * T * (est.modulation_variance + eps) + 2.0 + 2.0 * vel) / (eta * T * eps + 2.0 + 2.0 * vel));
}

double gaussian_holevo(const ChannelEstimate& est, const KeyRateParams& params, double g) {
  const double T = est.transmittance, eps = est.excess_noise, VA = est.modulation_variance;
  const double eta = params.efficiency, vel = params.electronic_noise;
  const double Vc = 1.0 + g * g * VA;
  const double a = Vc;
  const double b = 1.0 + T * VA + T * eps;
  const double c = std::sqrt(T) * std::sqrt(Vc * Vc - 1.0) / g;
  const MatrixXd gab = block(a, b, c);
  const double s_ab = vn_entropy(gab);

  // Modes A, B, F0, G. The detector is a beam splitter eta mixing B with one
  // arm (F0) of an EPR pair of variance w; G is the other arm.
  const bool trusted = eta < 1.0 - 1e-12;
  const double w = trusted ? 1.0 + 2.0 * vel / (1.0 - eta) : 1.0;
  MatrixXd full = MatrixXd::Identity(8, 8);
  full.topLeftCorner(4, 4) = gab;
  const double z = std::sqrt(std::max(0.0, w * w - 1.0));
  full.bottomRightCorner(4, 4) = block(w, w, z);
  MatrixXd S = MatrixXd::Identity(8, 8);
  const double st = std::sqrt(eta), sr = std::sqrt(1.0 - eta);
  for (int q = 0; q < 2; ++q) {
    S(2 + q, 2 + q) = st;
    S(2 + q, 4 + q) = sr;
    S(4 + q, 2 + q) = -sr;
    S(4 + q, 4 + q) = st;
  }
  const MatrixXd out = S * full * S.transpose();
  // Heterodyne on B: gamma_{E|B} = gamma_E - sigma (gamma_B + I)^-1 sigma^T.
  const std::vector<int> keep = {0, 1, 4, 5, 6, 7};
  MatrixXd gE(6, 6), sig(6, 2);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) gE(i, j) = out(keep[i], keep[j]);
    sig(i, 0) = out(keep[i], 2);
    sig(i, 1) = out(keep[i], 3);
  }
  const MatrixXd gB = out.block(2, 2, 2, 2) + MatrixXd::Identity(2, 2);
  const MatrixXd cond = gE - sig * gB.inverse() * sig.transpose();
  const MatrixXd sym = 0.5 * (cond + cond.transpose());
  return s_ab - vn_entropy(sym);
}

KeyRateReport gaussian_keyrate(const ChannelEstimate& est, const KeyRateParams& params,
                               const CorrectionInputs& corr) {
  est.validate();
  params.validate();
  const double g = correction_factor(corr);
  const double raw = params.beta * gaussian_mutual_information(est, params) - gaussian_holevo(est, params, g);
  KeyRateReport r;
  r.method = Method::kGaussian;
  r.user = est.user;
  r.objective = raw;
  r.lower_bound = raw;
  r.bits_per_symbol = std::max(0.0, raw) * params.p_pass;
  r.clamped = raw < 0.0;
  r.bits_per_second = keyrate_bps(r.bits_per_symbol, params).value;
  return r;
}

// ---------------------------------------------------------------------------
// PLOB and unit conversion

double plob_bound(double transmittance) {
  if (!(transmittance > 0.0 && transmittance <= 1.0)) throw InputError("plob: transmittance must lie in (0,1]");
  if (transmittance >= 1.0) return std::numeric_limits<double>::infinity();
  return -std::log2(1.0 - transmittance);
}

KeyRateReport plob_report(double transmittance, const KeyRateParams& params) {
  KeyRateReport r;
  r.method = Method::kPlob;
  r.bits_per_symbol = plob_bound(transmittance);
  r.infinite = std::isinf(r.bits_per_symbol);
  r.bits_per_second = r.bits_per_symbol * params.rate_baud;
  return r;
}

Bps keyrate_bps(double bits_per_symbol, const KeyRateParams& params) {
  if (bits_per_symbol < 0.0) return {0.0, true};
  return {bits_per_symbol * params.rate_baud, false};
}

// ---------------------------------------------------------------------------
// Relative-entropy engine

namespace detail {

MatrixXcd qpsk_gram(double amplitude) {
  MatrixXcd G(4, 4);
  std::array<Complex, 4> a;
  for (int k = 0; k < 4; ++k) a[static_cast<std::size_t>(k)] = std::polar(amplitude, k * kPi / 2.0);
  for (int l = 0; l < 4; ++l)
    for (int h = 0; h < 4; ++h) {
      const Complex al = a[static_cast<std::size_t>(l)], ah = a[static_cast<std::size_t>(h)];
      G(l, h) = 0.25 * std::exp(-0.5 * (std::norm(al) + std::norm(ah)) + std::conj(ah) * al);
    }
  return G;
}

namespace {

// Integral of exp(i k theta) over |theta| < pi/4.
double wedge_fourier(int k) { return k == 0 ? kPi / 2.0 : 2.0 * std::sin(k * kPi / 4.0) / k; }

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

MatrixXcd region_zero(int cutoff, double nd) {
  const int N = cutoff + 1;
  MatrixXcd R = MatrixXcd::Zero(N, N);
  std::vector<double> lf(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) lf[static_cast<std::size_t>(k)] = std::lgamma(k + 1.0);
  const double s = std::sqrt(nd / 2.0);
  if (s < 1e-6) {
    for (int m = 0; m < N; ++m)
      for (int n = 0; n < N; ++n) {
        const double radial = 0.5 * std::exp(std::lgamma(0.5 * (m + n) + 1.0) - 0.5 * (lf[static_cast<std::size_t>(m)] + lf[static_cast<std::size_t>(n)]));
        R(m, n) = wedge_fourier(m - n) * radial / kPi;
      }
    return R;
  }

  // Composite 20-point Gauss-Legendre in r, periodic trapezoid in theta.
  using GL = boost::math::quadrature::gauss<double, 20>;
  const double rmax = std::max(12.0, std::sqrt(2.0 * N) + 8.0);
  const int panels = static_cast<int>(std::ceil(rmax / 0.5));
  std::vector<double> rn, rw;
  for (int p = 0; p < panels; ++p) {
    const double a = p * rmax / panels, b = (p + 1) * rmax / panels;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    for (std::size_t i = 0; i < x.size(); ++i) {
      rn.push_back(mid + half * x[i]);
      rw.push_back(half * w[i]);
      rn.push_back(mid - half * x[i]);
      rw.push_back(half * w[i]);
    }
  }
  int nt = 512;
  while (nt < 16384 && 2.0 * kPi * rmax / nt > s / 4.0) nt *= 2;
  const double dth = 2.0 * kPi / nt;
  std::vector<Complex> coeff(static_cast<std::size_t>(2 * N - 1));
  std::vector<double> q(static_cast<std::size_t>(nt));
  for (std::size_t i = 0; i < rn.size(); ++i) {
    const double r = rn[i];
    for (int j = 0; j < nt; ++j) {
      const double th = j * dth;
      q[static_cast<std::size_t>(j)] = phi(r * std::cos(th - kPi / 4.0) / s) * phi(r * std::cos(th + kPi / 4.0) / s);
    }
    for (int k = -(N - 1); k <= N - 1; ++k) {
      Complex c = 0.0;
      for (int j = 0; j < nt; ++j) c += q[static_cast<std::size_t>(j)] * std::polar(1.0, k * j * dth);
      coeff[static_cast<std::size_t>(k + N - 1)] = c * dth;
    }
    const double lr = std::log(r);
    for (int m = 0; m < N; ++m)
      for (int n = 0; n < N; ++n) {
        const double radial = std::exp((m + n + 1) * lr - r * r - 0.5 * (lf[static_cast<std::size_t>(m)] + lf[static_cast<std::size_t>(n)]));
        R(m, n) += rw[i] * radial * coeff[static_cast<std::size_t>(m - n + N - 1)] / kPi;
      }
  }
  return 0.5 * (R + R.adjoint());
}

}  // namespace

std::vector<MatrixXcd> region_operators(int cutoff, double eta, double v_el) {
  if (cutoff < 1) throw InputError("region operators: cutoff must be >= 1");
  const double nd = (1.0 - eta + v_el) / eta;
  const MatrixXcd R0 = region_zero(cutoff, nd);
  std::vector<MatrixXcd> out;
  for (int z = 0; z < 4; ++z) {
    MatrixXcd R = R0;
    for (int m = 0; m <= cutoff; ++m)
      for (int n = 0; n <= cutoff; ++n) R(m, n) *= std::polar(1.0, (m - n) * z * kPi / 2.0);
    out.push_back(R);
  }
  return out;
}

}  // namespace detail

double qpsk_leakage(const ChannelEstimate& est, const KeyRateParams& params) {
  if (!std::isnan(params.delta_ec)) return params.delta_ec;
  const double eta = params.efficiency, T = est.transmittance;
  const double mean = std::sqrt(eta * T * est.modulation_variance / 2.0);
  const double sd = std::sqrt((1.0 + params.electronic_noise + eta * T * est.excess_noise / 2.0) / 2.0);
  // Quadrant outcome = two independent sign bits in the 45-degree rotated frame.
  const double pe = detail::phi(-mean / std::sqrt(2.0) / sd);
  auto h2 = [](double p) { return p <= 0.0 || p >= 1.0 ? 0.0 : -p * std::log2(p) - (1 - p) * std::log2(1 - p); };
  const double mutual = 2.0 * (1.0 - h2(pe));
  return 2.0 - params.beta * mutual;
}

namespace {

using sdp::Blocks;
using sdp::CMatrix;

struct HermEig {
  Eigen::VectorXd values;
  CMatrix vectors;
};

HermEig heig(const CMatrix& M) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (M + M.adjoint()));
  return {es.eigenvalues(), es.eigenvectors()};
}

double entropy_bits(const Eigen::VectorXd& lam) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < lam.size(); ++i)
    if (lam(i) > 1e-300) h -= lam(i) * std::log2(lam(i));
  return h;
}

CMatrix log2m(const HermEig& e, double floor) {
  Eigen::VectorXd l = e.values;
  for (Eigen::Index i = 0; i < l.size(); ++i) l(i) = std::log2(std::max(l(i), floor));
  return e.vectors * l.asDiagonal() * e.vectors.adjoint();
}

// Tr(log2(M) D) from the eigen-decomposition of M.
double log_trace(const HermEig& e, const CMatrix& d) {
  const CMatrix dd = e.vectors.adjoint() * d * e.vectors;
  double s = 0.0;
  for (Eigen::Index i = 0; i < dd.rows(); ++i) s += std::log2(std::max(e.values(i), 1e-15)) * dd(i, i).real();
  return s;
}

CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// The problem is invariant under U = (|x> -> |x+1>) (x) exp(i pi n / 2), which
// maps region z to z+1 and permutes the QPSK states. Twirling over U keeps
// feasibility and cannot raise the objective, so the search runs over
// U-invariant states: block diagonal in the eigenbasis of U (4 blocks of size
// cutoff+1), with sum_z H(K_z rho K_z^+) = 4 H(K_0 rho K_0^+).
class DmProblem {
 public:
  DmProblem(const ChannelEstimate& est, const KeyRateParams& params, double g) {
    N_ = params.fock_cutoff + 1;
    n_ = 4 * N_;
    const double amp = std::sqrt(est.modulation_variance / 2.0);
    const CMatrix gram = detail::qpsk_gram(g * amp);
    {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-12 || std::abs(gram.trace().real() - 1.0) > 1e-12)
        throw InputError("dm-sdp: Gram matrix is not a density operator");
    }
    const CMatrix R0 = detail::region_operators(params.fock_cutoff, params.efficiency, params.electronic_noise)[0];
    const HermEig e = heig(R0);
    const Eigen::VectorXd sq = e.values.cwiseMax(0.0).cwiseSqrt();
    K0_ = kron(CMatrix::Identity(4, 4), e.vectors * sq.asDiagonal() * e.vectors.adjoint());

    const Complex I(0.0, 1.0);
    for (int b = 0; b < 4; ++b) {
      CMatrix Q = CMatrix::Zero(n_, N_);
      for (int m = 0; m < N_; ++m) {
        const int k = ((b - m) % 4 + 4) % 4;
        for (int x = 0; x < 4; ++x) Q(x * N_ + m, m) = 0.5 * std::pow(I, -k * x);
      }
      Q_.push_back(Q);
    }

    // Full constraint set: Gram matrix of the corrected states, then first and
    // second moments per prepared state.
    CMatrix a = CMatrix::Zero(N_, N_);
    for (int k = 1; k < N_; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
    const CMatrix ad = a.adjoint();
    const CMatrix q = 0.5 * (a + ad);
    const CMatrix p = (a - ad) / (2.0 * I);
    const CMatrix num = ad * a;
    const CMatrix d = 0.5 * (a * a + ad * ad);
    const CMatrix IB = CMatrix::Identity(N_, N_);
    auto E = [](int k, int l) {
      CMatrix m = CMatrix::Zero(4, 4);
      m(k, l) = 1.0;
      return m;
    };
    for (int k = 0; k < 4; ++k) {
      add(kron(E(k, k), IB), gram(k, k).real());
      for (int l = k + 1; l < 4; ++l) {
        add(kron(0.5 * (E(k, l) + E(l, k)), IB), gram(k, l).real());
        add(kron(0.5 * I * (E(k, l) - E(l, k)), IB), gram(k, l).imag());
      }
    }
    const double T = est.transmittance, eps = est.excess_noise;
    for (int x = 0; x < 4; ++x) {
      const Complex alpha = std::polar(amp, x * kPi / 2.0);
      add(kron(E(x, x), q), 0.25 * std::sqrt(T) * alpha.real());
      add(kron(E(x, x), p), 0.25 * std::sqrt(T) * alpha.imag());
      add(kron(E(x, x), num), 0.25 * (T * std::norm(alpha) + T * eps / 2.0));
      add(kron(E(x, x), d), 0.25 * (T * alpha * alpha).real());
    }
    reduce();
  }

  CMatrix full(const Blocks& X) const {
    CMatrix rho = CMatrix::Zero(n_, n_);
    for (int b = 0; b < 4; ++b) rho += Q_[static_cast<std::size_t>(b)] * X[static_cast<std::size_t>(b)] * Q_[static_cast<std::size_t>(b)].adjoint();
    return rho;
  }

  /// D(G(rho) || Z(G(rho))) in bits: -H(rho) + sum_z H(K_z rho K_z^+).
  double objective(const Blocks& X) const {
    double f = 0.0;
    for (const auto& xb : X) f -= entropy_bits(heig(xb).values);
    const CMatrix rho = full(X);
    return f + 4.0 * entropy_bits(heig(K0_ * rho * K0_.adjoint()).values);
  }

  Blocks gradient(const Blocks& X) const {
    const CMatrix rho = full(X);
    const CMatrix L = K0_.adjoint() * log2m(heig(K0_ * rho * K0_.adjoint()), 1e-15) * K0_;
    Blocks G(4);
    for (std::size_t b = 0; b < 4; ++b) {
      const CMatrix gb = log2m(heig(X[b]), 1e-15) - 4.0 * Q_[b].adjoint() * L * Q_[b];
      G[b] = 0.5 * (gb + gb.adjoint());
    }
    return G;
  }

  /// <grad f(X), D>.
  double slope(const Blocks& X, const Blocks& D) const {
    double s = 0.0;
    for (std::size_t b = 0; b < 4; ++b) s += log_trace(heig(X[b]), D[b]);
    const CMatrix rho = full(X);
    return s - 4.0 * log_trace(heig(K0_ * rho * K0_.adjoint()), K0_ * full(D) * K0_.adjoint());
  }

  sdp::Solution linear_min(const Blocks& C, const sdp::Options& opt) const {
    sdp::Problem p = reduced_;
    p.C = C;
    return sdp::solve(p, opt);
  }

  Blocks identity() const { return Blocks(4, CMatrix::Identity(N_, N_)); }

  double constraint_violation(const CMatrix& rho) const {
    double v = 0.0;
    for (std::size_t i = 0; i < A_.size(); ++i) v = std::max(v, std::abs(sdp::inner(A_[i], rho) - b_[i]));
    return v;
  }

 private:
  void add(CMatrix A, double value) {
    A_.push_back(std::move(A));
    b_.push_back(value);
  }

  // Restrict the constraints to the invariant blocks and keep a linearly
  // independent subset (twirling makes the 32 constraints redundant).
  void reduce() {
    const std::size_t m = A_.size();
    const Eigen::Index per = 2 * N_ * N_;
    Eigen::MatrixXd V(4 * per, static_cast<Eigen::Index>(m));
    std::vector<Blocks> red(m);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t b = 0; b < 4; ++b) {
        const CMatrix Ab = Q_[b].adjoint() * A_[i] * Q_[b];
        red[i].push_back(0.5 * (Ab + Ab.adjoint()));
        for (Eigen::Index k = 0; k < N_ * N_; ++k) {
          V(static_cast<Eigen::Index>(b) * per + k, static_cast<Eigen::Index>(i)) = red[i][b](k).real();
          V(static_cast<Eigen::Index>(b) * per + N_ * N_ + k, static_cast<Eigen::Index>(i)) = red[i][b](k).imag();
        }
      }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
    qr.setThreshold(1e-10);
    const auto rank = qr.rank();
    reduced_.block_sizes.assign(4, N_);
    reduced_.b.resize(rank);
    for (Eigen::Index r = 0; r < rank; ++r) {
      const auto i = static_cast<std::size_t>(qr.colsPermutation().indices()(r));
      Blocks blk = red[i];
      for (auto& mb : blk)
        if (mb.norm() < 1e-14) mb.resize(0, 0);
      reduced_.A.push_back(std::move(blk));
      reduced_.b(r) = b_[i];
    }
  }

  Eigen::Index N_ = 0, n_ = 0;
  CMatrix K0_;
  std::vector<CMatrix> Q_;
  std::vector<CMatrix> A_;
  std::vector<double> b_;
  sdp::Problem reduced_;
};

// Root of the increasing derivative phi' on [0, 1] by Illinois regula falsi,
// given phi'(0) < 0.
template <class D>
double line_search(D&& dphi, double d0) {
  const double d1 = dphi(1.0);
  if (d1 <= 0.0) return 1.0;
  double a = 0.0, b = 1.0, fa = d0, fb = d1;
  int side = 0;
  for (int k = 0; k < 30 && b - a > 1e-9; ++k) {
    const double c = (a * fb - b * fa) / (fb - fa);
    const double fc = dphi(c);
    if (std::abs(fc) < 1e-13) return c;
    if (fc < 0.0) {
      a = c;
      fa = fc;
      if (side == -1) fb *= 0.5;
      side = -1;
    } else {
      b = c;
      fb = fc;
      if (side == 1) fa *= 0.5;
      side = 1;
    }
  }
  return 0.5 * (a + b);
}

Blocks axpy(const Blocks& x, double t, const Blocks& d) {
  Blocks out(x.size());
  for (std::size_t b = 0; b < x.size(); ++b) out[b] = x[b] + t * d[b];
  return out;
}

}  // namespace

KeyRateReport dm_keyrate_sdp(const ChannelEstimate& est, const KeyRateParams& params,
                             const CorrectionInputs& corr) {
  est.validate();
  params.validate();
  const double g = correction_factor(corr);
  const DmProblem prob(est, params, g);

  sdp::Options opt;
  opt.tolerance = 1e-10;
  opt.max_iterations = 100;
  // Interior starting point: the central solution of a constant objective.
  const sdp::Solution start = prob.linear_min(prob.identity(), opt);
  if (start.primal_infeasibility > 1e-7)
    throw InputError("dm-sdp: observations are inconsistent with the Gram constraint (primal residual " +
                     std::to_string(start.primal_infeasibility) + ")");
  Blocks X = start.X;

  KeyRateReport r;
  r.method = Method::kDmSdp;
  r.user = est.user;
  double f = prob.objective(X);
  double best_lb = -std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  int it = 0;
  // Conditional gradient. The lower bound at each iterate is
  // f(X) - <grad, X> + min_sigma <grad, sigma>, with the minimum bounded from
  // below by weak duality; iteration stops once that gap is below tolerance.
  for (; it < params.max_iterations; ++it) {
    r.objective_history.push_back(f);
    const Blocks grad = prob.gradient(X);
    const sdp::Solution lin = prob.linear_min(grad, opt);
    const double at_x = sdp::inner(grad, X);
    // Feasible sigma have unit trace, so <R, sigma> >= min(0, lambda_min(R)).
    const double lin_lb = lin.dual_objective + std::min(0.0, lin.dual_residual_min_eig);
    gap = std::max(0.0, at_x - lin_lb);
    best_lb = std::max(best_lb, f - gap);
    if (gap < params.gap_tolerance) break;
    Blocks dir(4);
    for (std::size_t b = 0; b < 4; ++b) dir[b] = lin.X[b] - X[b];
    const double t = line_search([&](double s) { return prob.slope(axpy(X, s, dir), dir); }, sdp::inner(grad, dir));
    Blocks next = axpy(X, t, dir);
    for (auto& nb : next) nb = 0.5 * (nb + nb.adjoint());
    const double fn = prob.objective(next);
    if (!(fn <= f)) break;
    X = std::move(next);
    f = fn;
  }
  r.iterations = it;
  r.gap = gap;
  r.objective = f;
  r.lower_bound = best_lb;
  if (gap >= params.gap_tolerance)
    throw SolverError("dm-sdp: no convergence within " + std::to_string(params.max_iterations) +
                          " iterations (gap " + std::to_string(gap) + ")",
                      gap, it);
  if (prob.constraint_violation(prob.full(X)) > 1e-6)
    throw SolverError("dm-sdp: final state violates the constraints", gap, it);
  r.delta_ec = qpsk_leakage(est, params);
  const double raw = params.p_pass * (best_lb - r.delta_ec);
  r.clamped = raw < 0.0;
  r.bits_per_symbol = std::max(0.0, raw);
  r.bits_per_second = keyrate_bps(r.bits_per_symbol, params).value;
  return r;
}

}  // namespace dqan::keyrate
