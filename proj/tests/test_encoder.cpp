// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <array>
#include <cmath>

#include "dqan/encoder.hpp"
#include "support.hpp"

using namespace dqan;
using namespace dqan::encoder;
using Catch::Approx;

TEST_CASE("symbol values are equiprobable", "[encoder]") {
  const auto plan = SidemodePlan::reference();
  const auto frame = generate_symbols(plan, 1000000, 7);
  REQUIRE(frame.n_users() == 8);
  for (const auto& row : frame.symbols) {
    std::array<double, 4> count{};
    for (auto k : row) count[k] += 1.0;
    for (double c : count) CHECK(std::abs(c / 1e6 - 0.25) < 0.002);
  }
}

TEST_CASE("symbol frames are reproducible", "[encoder]") {
  auto plan = SidemodePlan::reference();
  plan.n_users = 1;
  plan.amplitudes.resize(1);
  const auto a = generate_symbols(plan, 4, 99);
  const auto b = generate_symbols(plan, 4, 99);
  CHECK(a.symbols == b.symbols);
  const auto c = generate_symbols(plan, 4, 100);
  const auto big_a = generate_symbols(plan, 4096, 99);
  const auto big_c = generate_symbols(plan, 4096, 100);
  CHECK(big_a.symbols != big_c.symbols);
  (void)c;
}

TEST_CASE("users are uncorrelated", "[encoder]") {
  const auto plan = SidemodePlan::reference();
  const auto frame = generate_symbols(plan, 100000, 11);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = i + 1; j < 8; ++j) {
      RealVec a(frame.symbols[i].begin(), frame.symbols[i].end());
      RealVec b(frame.symbols[j].begin(), frame.symbols[j].end());
      CHECK(std::abs(testing::pearson(a, b)) < 0.01);
    }
}

TEST_CASE("single user band carries alpha^2 per slot", "[encoder]") {
  auto plan = SidemodePlan::reference();
  plan.n_users = 1;
  plan.amplitudes = {0.8};
  SymbolFrame frame;
  frame.n_slots = 256;
  frame.symbols = {std::vector<std::uint8_t>(256, 0)};
  const auto w = build_baseband_waveform(frame, plan);
  const double f0 = plan.center_frequency(0);
  const double half = plan.signal_bandwidth_hz / 2;
  const double band = testing::band_energy(w.samples, w.sample_rate, f0 - half, f0 + half);
  // unit-energy pulses: |alpha|^2 photons per slot, i.e. V_A = 2 alpha^2 SNU
  CHECK(band / frame.n_slots == Approx(0.64).epsilon(0.01));
  CHECK(plan.user_modulation_variance(0) == Approx(2 * 0.64));
  // the pilot is a single line at F_0 + offset
  const double pilot = testing::line_power(w.samples, w.sample_rate, plan.pilot_frequency(0));
  const double expect = std::pow(plan.pilot_amplitude * 0.8, 2) * plan.baud;
  CHECK(pilot == Approx(expect).epsilon(1e-6));
}

TEST_CASE("reference plan places eight disjoint bands", "[encoder]") {
  const auto plan = SidemodePlan::reference();
  plan.validate();
  const auto frame = generate_symbols(plan, 512, 3);
  const auto w = build_baseband_waveform(frame, plan);
  const double half = plan.signal_bandwidth_hz / 2;
  const double total = testing::energy(w.samples, w.sample_rate);
  double sum_users = 0.0;
  for (std::size_t j = 0; j < 8; ++j) {
    CHECK(plan.center_frequency(j) == Approx(100e6 + 200e6 * j));
    const auto uw = build_user_waveform(frame, plan, j, false);
    const double all = testing::energy(uw.samples, uw.sample_rate);
    const double fj = plan.center_frequency(j);
    const double in = testing::band_energy(uw.samples, uw.sample_rate, fj - half, fj + half);
    // containment
    CHECK(in / all >= 0.99);
    // nothing of user j inside any other user's band
    for (std::size_t k = 0; k < 8; ++k) {
      if (k == j) continue;
      const double fk = plan.center_frequency(k);
      CHECK(testing::band_energy(uw.samples, uw.sample_rate, fk - half, fk + half) < 1e-9 * all);
    }
    sum_users += testing::energy(build_user_waveform(frame, plan, j, true).samples, w.sample_rate);
  }
  CHECK(total == Approx(sum_users).epsilon(0.01));
}

TEST_CASE("waveform is deterministic", "[encoder]") {
  const auto plan = SidemodePlan::reference();
  const auto a = build_baseband_waveform(generate_symbols(plan, 64, 5), plan);
  const auto b = build_baseband_waveform(generate_symbols(plan, 64, 5), plan);
  CHECK(a.samples == b.samples);
}

TEST_CASE("ideal modulator has no mirror line", "[encoder]") {
  const double rate = 4e9, f = 300e6;
  const std::size_t n = 4000;
  Baseband d{ComplexVec(n), rate, 0.0};
  for (std::size_t k = 0; k < n; ++k) d.samples[k] = std::polar(1.0, 2 * kPi * f * k / rate);
  const auto out = iq_modulate(d, IqModulatorModel{0.1, 0.0, 0.0});
  const double p = testing::line_power(out.samples, rate, f);
  const double m = testing::line_power(out.samples, rate, -f);
  CHECK(m < 1e-8 * p);
}

TEST_CASE("mirror line follows (sigma/mu)^2", "[encoder]") {
  const double rate = 4e9, f = 300e6;
  const std::size_t n = 4000;
  Baseband d{ComplexVec(n), rate, 0.0};
  for (std::size_t k = 0; k < n; ++k) d.samples[k] = std::polar(1.0, 2 * kPi * f * k / rate);
  for (double sigma : {0.001, 0.005, 0.02}) {
    const IqModulatorModel m{0.1, sigma, 0.0};
    const auto out = iq_modulate(d, m);
    const double ratio = testing::line_power(out.samples, rate, f) / testing::line_power(out.samples, rate, -f);
    CHECK(ratio == Approx(std::pow(0.1 / sigma, 2)).epsilon(0.01));
  }
  const auto m35 = IqModulatorModel::from_suppression_db(35.0);
  CHECK(std::pow(m35.imbalance / m35.mean_depth, 2) == Approx(std::pow(10.0, -3.5)));
  const auto out = iq_modulate(d, m35);
  const double measured = 10 * std::log10(testing::line_power(out.samples, rate, f) /
                                          testing::line_power(out.samples, rate, -f));
  CHECK(std::abs(measured - 35.0) < 0.1);
}

TEST_CASE("sideband ratio g1", "[encoder]") {
  CHECK(sideband_ratio(IqModulatorModel::from_suppression_db(35.0)) == Approx(std::sqrt(1 / 1.000316)).margin(1e-6));
  CHECK(std::abs(sideband_ratio(IqModulatorModel::from_suppression_db(35.0)) - 0.9998) < 1e-4);
  CHECK(sideband_ratio(IqModulatorModel{0.1, 0.0, 0.0}) == 1.0);
  CHECK(sideband_ratio(IqModulatorModel::from_suppression_db(20.0)) == Approx(std::sqrt(1 / 1.01)).margin(1e-9));
  CHECK(std::abs(sideband_ratio(IqModulatorModel::from_suppression_db(20.0)) - 0.99504) < 1e-5);
  double prev = 0.0;
  for (double db = 5; db <= 60; db += 2.5) {
    const double g = sideband_ratio(IqModulatorModel::from_suppression_db(db));
    CHECK(g > prev);
    prev = g;
  }
}

TEST_CASE("modulation variance scales with amplitude squared", "[encoder]") {
  auto plan = SidemodePlan::reference();
  const double v = plan.modulation_variance();
  CHECK(v == Approx(8 * 1.17));
  for (double c : {0.5, 2.0, 3.3}) {
    auto p = plan;
    for (auto& a : p.amplitudes) a *= c;
    CHECK(p.modulation_variance() == Approx(c * c * v));
  }
}

TEST_CASE("invalid plans and modulators are rejected", "[encoder]") {
  auto plan = SidemodePlan::reference();
  plan.amplitudes.pop_back();
  CHECK_THROWS_AS(plan.validate(), ConfigError);
  CHECK_THROWS_AS((IqModulatorModel{0.3, 0.0, 0.0}.validate()), WeakModulationError);
  CHECK_THROWS_AS((IqModulatorModel{0.1, 0.2, 0.0}.validate()), ConfigError);
}
