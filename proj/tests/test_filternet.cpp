// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>

#include "dqan/filternet.hpp"
#include "support.hpp"

using namespace dqan;
using namespace dqan::filternet;
using Catch::Approx;

namespace {

FilterSpec spec_at(double f0, double dv = 100e6, double r = 0.227) {
  FilterSpec s;
  s.center_hz = f0;
  s.linewidth_hz = dv;
  s.residual_reflectivity = r;
  s.drop_bandwidth_hz = 100e6;
  return s;
}

// Brute-force oracle for the shares: adaptive quadrature of 1 / (1 + (2x/dv)^2).
double quad_share(double dv, double spacing, double bw) {
  auto t = [dv](double x) { return 1.0 / (1.0 + 4.0 * x * x / (dv * dv)); };
  using boost::math::quadrature::gauss_kronrod;
  const double own = gauss_kronrod<double, 61>::integrate(t, -bw / 2, bw / 2, 15, 1e-14);
  const double nb = gauss_kronrod<double, 61>::integrate(t, spacing - bw / 2, spacing + bw / 2, 15, 1e-14);
  return nb / own;
}

OpticalField tone(double f, double rate, std::size_t n, double amp = 1.0) {
  OpticalField x;
  x.sample_rate = rate;
  x.samples.resize(n);
  for (std::size_t k = 0; k < n; ++k) x.samples[k] = std::polar(amp, 2 * kPi * f * k / rate);
  return x;
}

}  // namespace

TEST_CASE("lorentzian transmission values", "[filternet]") {
  const auto s = spec_at(500e6);
  CHECK(lorentzian_transmission(s, 500e6) == 1.0);
  CHECK(lorentzian_transmission(s, 550e6) == Approx(0.5));
  CHECK(lorentzian_transmission(s, 450e6) == Approx(0.5));
  CHECK(lorentzian_transmission(s, 700e6) == Approx(1.0 / 17.0));
  // area-normalised form has peak 2 / (pi dv)
  CHECK(lorentzian_density(s, 500e6) == Approx(2.0 / (kPi * 100e6)));
}

TEST_CASE("crosstalk shares at the reference design", "[filternet]") {
  const auto plan = encoder::SidemodePlan::reference();
  const auto bank = make_bank(plan, 100e6, 1.6e9, 0.227);
  for (std::size_t j = 1; j + 1 < plan.n_users; ++j) {
    const auto c = crosstalk_fractions(bank[j], plan, j);
    CHECK(std::abs(c.lower - 0.0180) < 0.0002);
    CHECK(std::abs(c.upper - 0.0792) < 0.0005);
    const auto d = crosstalk_fractions_density(bank[j], plan, j);
    CHECK(d.lower == Approx(c.lower).epsilon(1e-12));
    CHECK(d.upper == Approx(c.upper).epsilon(1e-12));
  }
  const auto first = crosstalk_fractions(bank.front(), plan, 0);
  CHECK(first.lower == 0.0);
  const auto last = crosstalk_fractions(bank.back(), plan, 7);
  CHECK(last.upper == 0.0);
}

TEST_CASE("closed form agrees with quadrature", "[filternet]") {
  auto plan = encoder::SidemodePlan::reference();
  for (double dv : {20e6, 100e6, 150e6}) {
    for (double spacing : {150e6, 200e6, 400e6}) {
      plan.spacing_hz = spacing;
      auto s = spec_at(plan.center_frequency(3), dv, 1.0);
      const auto c = crosstalk_fractions(s, plan, 3);
      const double q = quad_share(dv, spacing, plan.signal_bandwidth_hz);
      CHECK(c.upper == Approx(q).epsilon(1e-9));
      // R = 1 and symmetric placement: both neighbours see the same share
      CHECK(c.lower == Approx(c.upper).epsilon(1e-12));
    }
  }
}

TEST_CASE("crosstalk limits and monotonicity", "[filternet]") {
  auto plan = encoder::SidemodePlan::reference();
  auto s = spec_at(plan.center_frequency(2), 10.0);
  auto c = crosstalk_fractions(s, plan, 2);
  CHECK(c.upper < 1e-8);
  CHECK(c.lower < 1e-8);
  s = spec_at(plan.center_frequency(2), 100e6, 0.0);
  CHECK(crosstalk_fractions(s, plan, 2).lower == 0.0);

  double prev = 0.0;
  for (double dv = 20e6; dv <= 190e6; dv += 10e6) {
    s = spec_at(plan.center_frequency(2), dv);
    const double u = crosstalk_fractions(s, plan, 2).upper;
    CHECK(u > prev);
    prev = u;
  }
  prev = 1.0;
  for (double sp = 110e6; sp <= 600e6; sp += 10e6) {
    plan.spacing_hz = sp;
    s = spec_at(plan.center_frequency(2), 100e6);
    const double u = crosstalk_fractions(s, plan, 2).upper;
    CHECK(u < prev);
    prev = u;
  }
}

TEST_CASE("drop of a tone", "[filternet]") {
  const double rate = 4e9;
  const std::size_t n = 4000;
  auto s = spec_at(500e6, 100e6, 0.0);
  auto in = tone(500e6, rate, n);
  auto out = drop_sidemode(in, s);
  CHECK(out.dropped.energy() / in.energy() == Approx(1.0).epsilon(1e-12));
  CHECK(out.residual.energy() / in.energy() < 1e-12);

  s = spec_at(500e6);
  in = tone(700e6, rate, n);
  out = drop_sidemode(in, s);
  CHECK(out.dropped.energy() / in.energy() == Approx((1 - 0.227) / 17.0).epsilon(1e-9));
  s.residual_reflectivity = 0.0;
  out = drop_sidemode(in, s);
  CHECK(out.dropped.energy() / in.energy() == Approx(1.0 / 17.0).epsilon(1e-9));
}

TEST_CASE("ports are passive", "[filternet]") {
  for (double r : {0.0, 0.227, 0.9}) {
    const auto s = spec_at(300e6, 100e6, r);
    for (double f = -1e9; f <= 2e9; f += 1.7e6) {
      const auto [d, t] = port_transfer(s, f);
      CHECK(d <= 1.0);
      CHECK(t <= 1.0);
      CHECK(d + t <= 1.0 + 1e-15);
    }
  }
  const double rate = 4e9;
  const auto x = testing::flat_bands(8192, rate, {100e6, 300e6, 500e6}, 150e6, 5);
  OpticalField in{x, rate, 0.0, 1.0};
  const auto out = drop_sidemode(in, spec_at(300e6));
  CHECK(out.dropped.energy() + out.residual.energy() <= in.energy());
}

TEST_CASE("lossless idealisation conserves energy off the drop band", "[filternet]") {
  const double rate = 4e9;
  const std::size_t n = 4000;
  auto s = spec_at(500e6, 100e6, 0.0);
  OpticalField in = tone(500e6, rate, n);
  const auto far = tone(900e6, rate, n, 0.7);
  const auto neg = tone(-300e6, rate, n, 1.3);
  for (std::size_t k = 0; k < n; ++k) in.samples[k] += far.samples[k] + neg.samples[k];
  const auto out = drop_sidemode(in, s);
  CHECK((out.dropped.energy() + out.residual.energy()) / in.energy() == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("design rule", "[filternet]") {
  const auto plan = encoder::SidemodePlan::reference();
  auto bank = make_bank(plan, 100e6, 1.6e9, 0.227);
  CHECK(validate_design(bank[0], plan).pass());
  CHECK(bank[0].free_spectral_range() == Approx(1.6e9));
  CHECK(bank[0].finesse() == Approx(16.0));

  bank = make_bank(plan, 300e6, 1.6e9, 0.227);
  auto rep = validate_design(bank[0], plan);
  CHECK_FALSE(rep.pass());
  CHECK_FALSE(rep.linewidth.pass);
  CHECK(rep.fsr.pass);

  bank = make_bank(plan, 100e6, 1.0e9, 0.227);
  rep = validate_design(bank[0], plan);
  CHECK_FALSE(rep.fsr.pass);
  CHECK(rep.linewidth.pass);

  bank = make_bank(plan, 200e6, 1.6e9, 0.227);
  CHECK_FALSE(validate_design(bank[0], plan).linewidth.pass);
  bank = make_bank(plan, 99e6, 1.6e9, 0.227);
  CHECK_FALSE(validate_design(bank[0], plan).linewidth.pass);
}

namespace {

struct CascadeShares {
  double lower = 0.0;
  double upper = 0.0;
  double lower_arriving = 0.0;  // shares with each user's band energy at the stage input
  double upper_arriving = 0.0;
};

// User k alone: flat 100 MHz band at F_k. Returns the energy of every band
// dropped at every stage, and the energy of the band arriving at each stage.
std::vector<CascadeShares> cascade_shares() {
  const auto plan = encoder::SidemodePlan::reference();
  const auto bank = make_bank(plan, 100e6, 1.6e9, 0.227);
  const double rate = 4e9;
  const std::size_t n = 1 << 15;
  std::vector<std::vector<double>> dropped(8, std::vector<double>(8));  // [stage][user]
  std::vector<std::vector<double>> arriving(8, std::vector<double>(8));
  for (std::size_t u = 0; u < 8; ++u) {
    OpticalField in{testing::flat_bands(n, rate, {plan.center_frequency(u)}, 100e6, 17 + u), rate, 0.0, 1.0};
    OpticalField cur = in;
    for (std::size_t j = 0; j < 8; ++j) {
      arriving[j][u] = cur.energy();
      auto out = drop_sidemode(cur, bank[j]);
      dropped[j][u] = out.dropped.energy();
      cur = out.residual;
    }
    // cascade() must agree with the stage-by-stage chain
    const auto drops = cascade(in, bank);
    for (std::size_t j = 0; j < 8; ++j) CHECK(drops[j].energy() == Approx(dropped[j][u]).epsilon(1e-12));
  }
  std::vector<CascadeShares> out(8);
  for (std::size_t j = 0; j < 8; ++j) {
    if (j > 0) {
      out[j].lower = dropped[j][j - 1] / dropped[j][j];
      out[j].lower_arriving =
          (dropped[j][j - 1] / arriving[j - 1][j - 1]) / (dropped[j][j] / arriving[j][j]);
    }
    if (j + 1 < 8) {
      out[j].upper = dropped[j][j + 1] / dropped[j][j];
      out[j].upper_arriving = (dropped[j][j + 1] / arriving[j][j + 1]) / (dropped[j][j] / arriving[j][j]);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("cascade drops match the closed form once upstream loss is removed", "[filternet]") {
  const auto plan = encoder::SidemodePlan::reference();
  const auto bank = make_bank(plan, 100e6, 1.6e9, 0.227);
  const auto s = cascade_shares();
  for (std::size_t j = 0; j < 8; ++j) {
    const auto c = crosstalk_fractions(bank[j], plan, j);
    INFO("user " << j + 1);
    if (j > 0) CHECK(s[j].lower_arriving == Approx(c.lower).epsilon(0.01));
    if (j + 1 < 8) CHECK(s[j].upper_arriving == Approx(c.upper).epsilon(0.01));
  }
}

// Raw shares at the drop ports. The user's own band has already crossed the
// through ports of every lower stage, which raises the measured shares by
// about 5 to 6 percent for users 2 to 8; see the notes in the README.
TEST_CASE("cascade drop ports carry the closed-form shares within 5%", "[filternet][!shouldfail]") {
  const auto plan = encoder::SidemodePlan::reference();
  const auto bank = make_bank(plan, 100e6, 1.6e9, 0.227);
  const auto s = cascade_shares();
  for (std::size_t j = 0; j < 8; ++j) {
    const auto c = crosstalk_fractions(bank[j], plan, j);
    INFO("user " << j + 1 << " lower " << s[j].lower << " upper " << s[j].upper);
    if (j > 0) CHECK(s[j].lower == Approx(c.lower).epsilon(0.05));
    if (j + 1 < 8) CHECK(s[j].upper == Approx(c.upper).epsilon(0.05));
  }
}
