// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dqan/channel.hpp"
#include "dqan/dsp.hpp"
#include "dqan/encoder.hpp"
#include "dqan/filternet.hpp"
#include "dqan/keyrate.hpp"

namespace dqan::cli {

/// Per-user calibration and link data.
struct UserParams {
  double modulation_variance = 1.17;
  double efficiency = 0.51;
  double electronic_noise = 0.19;
  /// Excess noise of the link, SNU referred to the channel input.
  double excess_noise = 0.02;
  /// Extra loss on this user's drop path; negative values mean less loss.
  double loss_offset_db = 0.0;
};

struct SensingParams {
  dsp::FilterPurpose band = dsp::FilterPurpose::kVib100Hz;
  std::size_t trials = 20;
  /// In-band SNR used to set the event amplitude; NaN keeps amplitude_rad.
  double snr_db = 40.0;
  channel::TraceTierSpec tier;
  /// Correlation window; negative selects the event duration.
  double gate_s = -1.0;
};

struct ScenarioConfig {
  encoder::SidemodePlan plan;
  double modulator_suppression_db = 35.0;
  double modulator_depth = 0.1;
  double filter_linewidth_hz = 100e6;
  double filter_fsr_hz = 1.6e9;
  double residual_reflectivity = 0.227;
  std::vector<filternet::FilterSpec> bank;
  channel::ChannelSpec link;
  channel::NoiseSpec noise;
  std::vector<channel::VibrationEvent> events;
  dsp::LoSpec lo;
  double detector_bandwidth_hz = 1.8e9;
  std::vector<UserParams> users;
  keyrate::KeyRateParams keyrate;
  /// Feed the estimated (T, eps) to the rate solvers instead of the configured values.
  bool keyrate_from_estimate = false;
  bool run_gaussian = true;
  bool run_dm = true;
  SensingParams sensing;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::size_t qkd_slots = 100000;
  std::size_t field_symbols = 1024;
  int bootstrap_resamples = 50;
  unsigned threads = 0;

  encoder::IqModulatorModel modulator() const;
  dsp::DetectorSpec detector(std::size_t user) const;
  double user_transmittance(std::size_t user) const;
};

/// Parse INI text. Unknown sections or keys and every invariant violation
/// are collected into one ConfigError.
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Canonical INI text with every value spelled out (defaults included).
std::string to_ini(const ScenarioConfig& cfg);
/// SHA-256 (hex) of the canonical text.
std::string config_hash(const ScenarioConfig& cfg);
std::string sha256_hex(const std::string& data);

/// Section and key names accepted by parse_config.
std::vector<std::string> schema_keys(const std::string& section);

}  // namespace dqan::cli
