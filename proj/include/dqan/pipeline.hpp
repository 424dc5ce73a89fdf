// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dqan/channel.hpp"
#include "dqan/config.hpp"
#include "dqan/keyrate.hpp"
#include "dqan/sensing.hpp"

namespace dqan::cli {

inline constexpr const char* kReportSchema = "dqan.run-report/1";
std::string version();

enum class Mode { kQkd, kSensing, kBoth };
Mode parse_mode(std::string_view name);
std::string mode_name(Mode m);

struct FieldTierOptions {
  bool noiseless = false;       // no shot, electronic, excess or laser noise
  bool bypass_filters = false;  // every user sees the undivided field
  bool back_to_back = false;    // skip the fiber entirely
  bool ideal_modulator = false; // no mirror sideband
};

/// Diagnostics of one short full-band frame for one user.
struct FieldTierResult {
  std::size_t user = 0;
  std::size_t symbols = 0;
  double pilot_if_hz = 0.0;          // measured pilot beat frequency
  double frequency_error_hz = 0.0;   // measured minus nominal
  double gain = 0.0;                 // |least-squares gain| of received vs sent amplitudes
  double evm = 0.0;                  // rms error vector / rms reference after gain removal
  std::size_t phase_slips = 0;
};

/// encode -> IQ modulate -> filter cascade -> fiber -> heterodyne -> pilot
/// lock -> phase estimation -> matched filter, for every user.
std::vector<FieldTierResult> run_field_tier(const ScenarioConfig& cfg, std::uint64_t seed,
                                            const FieldTierOptions& opt = {});

struct UserQkdResult {
  std::size_t user = 0;
  double transmittance = 0.0;  // configured
  channel::ExcessNoiseBudget budget;
  double excess_noise = 0.0;   // configured total
  keyrate::ChannelEstimate estimate;
  keyrate::EstimateSpread spread;
  keyrate::CorrectionInputs corrections;
  double correction = 1.0;
  std::optional<keyrate::KeyRateReport> gaussian;
  std::optional<keyrate::KeyRateReport> dm;
  keyrate::KeyRateReport plob;
  std::optional<FieldTierResult> field;
};

struct SensingRun {
  sensing::SensingScenario scenario;
  sensing::ResolutionSummary summary;
};

struct RunOptions {
  bool field_tier = true;
  unsigned threads = 0;  // 0 takes the config value
};

struct RunReport {
  std::string schema = kReportSchema;
  std::string version;
  std::string config_hash;
  std::uint64_t seed = 0;
  Mode mode = Mode::kBoth;
  double length_km = 0.0;
  std::vector<UserQkdResult> users;
  std::optional<SensingRun> sensing;
  /// Wall-clock seconds per stage. Kept out of the JSON report so reruns
  /// stay byte-identical; written to timing.json instead.
  std::map<std::string, double> timing_s;

  double average_bps(keyrate::Method m) const;
};

/// Symbol-tier estimation and key rates for one user.
UserQkdResult run_qkd_user(const ScenarioConfig& cfg, std::size_t user, std::uint64_t seed);

/// Sensing scenario assembled from the config's link, noise, trace tier and first event.
sensing::SensingScenario sensing_scenario(const ScenarioConfig& cfg);

RunReport run_scenario(const ScenarioConfig& cfg, Mode mode, const RunOptions& opt = {});

/// Canonical JSON text of the report (sorted keys, two-space indent).
std::string report_json(const RunReport& r);
std::string keyrate_csv(const RunReport& r);
std::string field_tier_csv(const RunReport& r);
std::string trials_csv(const RunReport& r);
std::string sensing_summary_json(const RunReport& r);
/// Drop-port power transmission of every bank stage, columns f_Hz, t_0 ...
std::string filter_bank_csv(const ScenarioConfig& cfg, std::size_t points = 2001);

/// Writes report.json, report.sha256, timing.json, config.ini and the
/// CSV artifacts of the mode into `dir`. Returns the paths written.
std::vector<std::string> write_run_artifacts(const RunReport& r, const ScenarioConfig& cfg, const std::string& dir);

/// Intermediate products: the transmitted waveform (float32 I/Q + JSON
/// sidecar), one phase trace pair, and the digital filter responses.
std::vector<std::string> write_debug_artifacts(const ScenarioConfig& cfg, const std::string& dir);

enum class SweepVar { kDistance, kProbePower, kLinewidth, kSnr };
SweepVar parse_sweep_var(std::string_view name);
std::string sweep_var_name(SweepVar v);
/// distance and probe_power run the qkd chain, linewidth and snr the sensing chain.
Mode sweep_mode(SweepVar v);

/// Copy of cfg with the variable set to `value`, revalidated. qkd-mode
/// variables also drop the vibration events.
ScenarioConfig apply_sweep_value(const ScenarioConfig& cfg, SweepVar var, double value);

struct SweepPoint {
  double value = 0.0;
  bool ok = false;
  std::string error;
  RunReport report;
};

struct SweepResult {
  SweepVar var = SweepVar::kDistance;
  std::vector<SweepPoint> points;
};

/// Runs every grid point; failures are recorded per point. Throws
/// ConfigError on an empty grid.
SweepResult sweep(const ScenarioConfig& cfg, SweepVar var, const std::vector<double>& grid,
                  const RunOptions& opt = {});
std::string sweep_csv(const SweepResult& s);

/// Excess-noise estimates of one user with the backward probe off and on,
/// sharing every random stream so the pair differs only by the probe.
struct ProbePair {
  double length_km = 0.0;
  double eps_off = 0.0;
  double se_off = 0.0;
  double eps_on = 0.0;
  double se_on = 0.0;
  double raman_snu = 0.0;
  double difference() const { return eps_on - eps_off; }
  /// 95% intervals of the two estimates overlap.
  bool overlapping() const;
};

std::vector<ProbePair> probe_comparison(const ScenarioConfig& cfg, const std::vector<double>& distances_km,
                                        double probe_dbm = channel::kRamanAnchorDbm, std::size_t user = 0);
std::string probe_pairs_csv(const std::vector<ProbePair>& pairs);

}  // namespace dqan::cli
