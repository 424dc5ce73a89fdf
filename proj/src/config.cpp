// SPDX-License-Identifier: Apache-2.0
#include "dqan/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace dqan::cli {

namespace pt = boost::property_tree;

encoder::IqModulatorModel ScenarioConfig::modulator() const {
  return encoder::IqModulatorModel::from_suppression_db(modulator_suppression_db, modulator_depth);
}

dsp::DetectorSpec ScenarioConfig::detector(std::size_t user) const {
  dsp::DetectorSpec d;
  d.efficiency = users.at(user).efficiency;
  d.electronic_noise = users.at(user).electronic_noise;
  d.bandwidth_hz = detector_bandwidth_hz;
  return d;
}

double ScenarioConfig::user_transmittance(std::size_t user) const {
  return link.transmittance() * std::pow(10.0, -users.at(user).loss_offset_db / 10.0);
}

namespace {

const std::map<std::string, std::vector<std::string>>& schema() {
  static const std::map<std::string, std::vector<std::string>> s = {
      {"run", {"seed", "output_dir", "qkd_slots", "field_symbols", "bootstrap_resamples", "threads"}},
      {"plan",
       {"n_users", "base_freq_hz", "spacing_hz", "baud", "signal_bandwidth_hz", "pilot_offset_hz", "pilot_amplitude",
        "rolloff", "sample_rate"}},
      {"modulator", {"suppression_db", "mean_depth"}},
      {"filter", {"linewidth_hz", "fsr_hz", "residual_reflectivity", "core_index"}},
      {"channel", {"length_km", "loss_db_per_km", "core_index"}},
      {"noise", {"server_linewidth_hz", "lo_linewidth_hz", "system_phase_psd", "eps_freq", "eps_filt", "probe_power_dbm"}},
      {"receiver", {"lo_offset_hz", "detector_bandwidth_hz"}},
      {"users", {"modulation_variance", "efficiency", "electronic_noise", "excess_noise", "loss_offset_db"}},
      {"keyrate",
       {"rate_baud", "beta", "p_pass", "delta_ec", "fock_cutoff", "max_iterations", "gap_tolerance", "methods", "inputs"}},
      {"sensing",
       {"band", "trials", "snr_db", "trace_rate", "duration_s", "residual_offset_hz", "pilot_snr_db", "probe_snr_db",
        "gate_s"}},
      {"event", {"position_km", "kind", "frequency_hz", "amplitude_rad", "start_s", "duration_s"}},
  };
  return s;
}

const std::vector<std::string> kRequired = {"run", "plan", "filter", "channel", "users"};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

bool is_event_section(const std::string& name) { return name == "event" || name.rfind("event.", 0) == 0; }

// Collects problems instead of throwing at the first one.
class Reader {
 public:
  explicit Reader(std::vector<std::string>& problems) : problems_(problems) {}

  double number(const std::string& where, const std::string& text) {
    const std::string t = trim(text);
    if (t == "off" || t == "-inf") return -std::numeric_limits<double>::infinity();
    if (t == "inf") return std::numeric_limits<double>::infinity();
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) {
      problems_.push_back(where + ": '" + t + "' is not a number");
      return std::numeric_limits<double>::quiet_NaN();
    }
    return v;
  }

  std::vector<double> list(const std::string& where, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(number(where, item));
    return out;
  }

  template <class F>
  void get(const pt::ptree& sec, const std::string& section, const std::string& key, F&& apply) {
    if (auto v = sec.get_optional<std::string>(key)) apply(section + "." + key, *v);
  }

  void problem(const std::string& p) { problems_.push_back(p); }

 private:
  std::vector<std::string>& problems_;
};

template <class Fn>
void collect(std::vector<std::string>& problems, const std::string& context, Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    problems.push_back(context + ": " + e.what());
  }
}

std::size_t to_count(double v) { return v >= 0.0 && std::isfinite(v) ? static_cast<std::size_t>(std::llround(v)) : 0; }

}  // namespace

std::vector<std::string> schema_keys(const std::string& section) {
  const auto& s = schema();
  const auto it = s.find(is_event_section(section) ? "event" : section);
  return it == s.end() ? std::vector<std::string>{} : it->second;
}

ScenarioConfig parse_config(const std::string& text) {
  pt::ptree tree;
  {
    std::istringstream in(text);
    try {
      pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
      throw ConfigError(std::string("config syntax: ") + e.what());
    }
  }

  std::vector<std::string> problems;
  std::set<std::string> present;
  for (const auto& [name, sec] : tree) {
    if (sec.empty() && !sec.data().empty()) {
      problems.push_back("key '" + name + "' appears outside any section");
      continue;
    }
    const auto keys = schema_keys(name);
    if (keys.empty()) {
      problems.push_back("unknown section [" + name + "]");
      continue;
    }
    present.insert(name);
    for (const auto& [key, value] : sec) {
      (void)value;
      if (std::find(keys.begin(), keys.end(), key) == keys.end())
        problems.push_back("unknown key '" + key + "' in [" + name + "]");
    }
  }
  std::vector<std::string> missing;
  for (const auto& r : kRequired)
    if (!present.count(r)) missing.push_back(r);
  if (!missing.empty()) {
    std::string m = "missing required section(s):";
    for (const auto& s : missing) m += " [" + s + "]";
    problems.push_back(m);
  }
  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }

  ScenarioConfig c;
  Reader rd(problems);
  const pt::ptree empty;
  auto section = [&](const std::string& name) -> const pt::ptree& {
    const auto it = tree.find(name);
    return it == tree.not_found() ? empty : it->second;
  };

  // [run]
  {
    const auto& s = section("run");
    rd.get(s, "run", "seed", [&](const auto& w, const auto& v) {
      try {
        std::size_t pos = 0;
        c.seed = std::stoull(trim(v), &pos, 0);
        if (pos != trim(v).size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        rd.problem(w + ": '" + v + "' is not an unsigned integer");
      }
    });
    rd.get(s, "run", "output_dir", [&](const auto&, const auto& v) { c.output_dir = trim(v); });
    rd.get(s, "run", "qkd_slots", [&](const auto& w, const auto& v) { c.qkd_slots = to_count(rd.number(w, v)); });
    rd.get(s, "run", "field_symbols", [&](const auto& w, const auto& v) { c.field_symbols = to_count(rd.number(w, v)); });
    rd.get(s, "run", "bootstrap_resamples",
           [&](const auto& w, const auto& v) { c.bootstrap_resamples = static_cast<int>(to_count(rd.number(w, v))); });
    rd.get(s, "run", "threads", [&](const auto& w, const auto& v) { c.threads = static_cast<unsigned>(to_count(rd.number(w, v))); });
  }
  // [plan]
  {
    const auto& s = section("plan");
    rd.get(s, "plan", "n_users", [&](const auto& w, const auto& v) { c.plan.n_users = to_count(rd.number(w, v)); });
    rd.get(s, "plan", "base_freq_hz", [&](const auto& w, const auto& v) { c.plan.base_freq_hz = rd.number(w, v); });
    rd.get(s, "plan", "spacing_hz", [&](const auto& w, const auto& v) { c.plan.spacing_hz = rd.number(w, v); });
    rd.get(s, "plan", "baud", [&](const auto& w, const auto& v) { c.plan.baud = rd.number(w, v); });
    rd.get(s, "plan", "signal_bandwidth_hz", [&](const auto& w, const auto& v) { c.plan.signal_bandwidth_hz = rd.number(w, v); });
    rd.get(s, "plan", "pilot_offset_hz", [&](const auto& w, const auto& v) { c.plan.pilot_offset_hz = rd.number(w, v); });
    rd.get(s, "plan", "pilot_amplitude", [&](const auto& w, const auto& v) { c.plan.pilot_amplitude = rd.number(w, v); });
    rd.get(s, "plan", "rolloff", [&](const auto& w, const auto& v) { c.plan.rolloff = rd.number(w, v); });
    rd.get(s, "plan", "sample_rate", [&](const auto& w, const auto& v) { c.plan.sample_rate = rd.number(w, v); });
  }
  // [modulator]
  {
    const auto& s = section("modulator");
    rd.get(s, "modulator", "suppression_db", [&](const auto& w, const auto& v) { c.modulator_suppression_db = rd.number(w, v); });
    rd.get(s, "modulator", "mean_depth", [&](const auto& w, const auto& v) { c.modulator_depth = rd.number(w, v); });
  }
  // [filter]
  double filter_core = kDefaultCoreIndex;
  {
    const auto& s = section("filter");
    rd.get(s, "filter", "linewidth_hz", [&](const auto& w, const auto& v) { c.filter_linewidth_hz = rd.number(w, v); });
    rd.get(s, "filter", "fsr_hz", [&](const auto& w, const auto& v) { c.filter_fsr_hz = rd.number(w, v); });
    rd.get(s, "filter", "residual_reflectivity", [&](const auto& w, const auto& v) { c.residual_reflectivity = rd.number(w, v); });
    rd.get(s, "filter", "core_index", [&](const auto& w, const auto& v) { filter_core = rd.number(w, v); });
  }
  // [channel]
  {
    const auto& s = section("channel");
    rd.get(s, "channel", "length_km", [&](const auto& w, const auto& v) { c.link.length_km = rd.number(w, v); });
    rd.get(s, "channel", "loss_db_per_km", [&](const auto& w, const auto& v) { c.link.loss_db_per_km = rd.number(w, v); });
    rd.get(s, "channel", "core_index", [&](const auto& w, const auto& v) { c.link.core_index = rd.number(w, v); });
  }
  // [noise]
  {
    const auto& s = section("noise");
    rd.get(s, "noise", "server_linewidth_hz", [&](const auto& w, const auto& v) { c.noise.server_linewidth_hz = rd.number(w, v); });
    rd.get(s, "noise", "lo_linewidth_hz", [&](const auto& w, const auto& v) { c.noise.lo_linewidth_hz = rd.number(w, v); });
    rd.get(s, "noise", "system_phase_psd", [&](const auto& w, const auto& v) { c.noise.system_phase_psd = rd.number(w, v); });
    rd.get(s, "noise", "eps_freq", [&](const auto& w, const auto& v) { c.noise.eps_freq = rd.number(w, v); });
    rd.get(s, "noise", "eps_filt", [&](const auto& w, const auto& v) { c.noise.eps_filt = rd.number(w, v); });
    rd.get(s, "noise", "probe_power_dbm", [&](const auto& w, const auto& v) { c.noise.probe_power_dbm = rd.number(w, v); });
  }
  // [receiver]
  {
    const auto& s = section("receiver");
    rd.get(s, "receiver", "lo_offset_hz", [&](const auto& w, const auto& v) { c.lo.offset_hz = rd.number(w, v); });
    rd.get(s, "receiver", "detector_bandwidth_hz", [&](const auto& w, const auto& v) { c.detector_bandwidth_hz = rd.number(w, v); });
  }
  c.lo.linewidth_hz = c.noise.lo_linewidth_hz;
  // [users]: each key is a comma list with one value per user or a single
  // value shared by all users.
  c.users.assign(c.plan.n_users, UserParams{});
  {
    const auto& s = section("users");
    auto per_user = [&](const std::string& key, double UserParams::*field) {
      rd.get(s, "users", key, [&](const auto& w, const auto& v) {
        const auto vals = rd.list(w, v);
        if (vals.size() == 1) {
          for (auto& u : c.users) u.*field = vals[0];
        } else if (vals.size() == c.users.size()) {
          for (std::size_t j = 0; j < vals.size(); ++j) c.users[j].*field = vals[j];
        } else {
          rd.problem(w + ": " + std::to_string(vals.size()) + " values for " + std::to_string(c.users.size()) +
                     " users");
        }
      });
    };
    per_user("modulation_variance", &UserParams::modulation_variance);
    per_user("efficiency", &UserParams::efficiency);
    per_user("electronic_noise", &UserParams::electronic_noise);
    per_user("excess_noise", &UserParams::excess_noise);
    per_user("loss_offset_db", &UserParams::loss_offset_db);
  }
  // [keyrate]
  c.keyrate.rate_baud = c.plan.baud;
  {
    const auto& s = section("keyrate");
    rd.get(s, "keyrate", "rate_baud", [&](const auto& w, const auto& v) { c.keyrate.rate_baud = rd.number(w, v); });
    rd.get(s, "keyrate", "beta", [&](const auto& w, const auto& v) { c.keyrate.beta = rd.number(w, v); });
    rd.get(s, "keyrate", "p_pass", [&](const auto& w, const auto& v) { c.keyrate.p_pass = rd.number(w, v); });
    rd.get(s, "keyrate", "delta_ec", [&](const auto& w, const auto& v) {
      c.keyrate.delta_ec = trim(v) == "auto" ? std::numeric_limits<double>::quiet_NaN() : rd.number(w, v);
    });
    rd.get(s, "keyrate", "fock_cutoff",
           [&](const auto& w, const auto& v) { c.keyrate.fock_cutoff = static_cast<int>(std::lround(rd.number(w, v))); });
    rd.get(s, "keyrate", "max_iterations",
           [&](const auto& w, const auto& v) { c.keyrate.max_iterations = static_cast<int>(std::lround(rd.number(w, v))); });
    rd.get(s, "keyrate", "gap_tolerance", [&](const auto& w, const auto& v) { c.keyrate.gap_tolerance = rd.number(w, v); });
    rd.get(s, "keyrate", "inputs", [&](const auto& w, const auto& v) {
      const auto m = trim(v);
      if (m == "estimated") c.keyrate_from_estimate = true;
      else if (m == "configured") c.keyrate_from_estimate = false;
      else rd.problem(w + ": unknown value '" + m + "' (expected configured, estimated)");
    });
    rd.get(s, "keyrate", "methods", [&](const auto& w, const auto& v) {
      c.run_gaussian = c.run_dm = false;
      std::stringstream ss(v);
      std::string m;
      while (std::getline(ss, m, ',')) {
        m = trim(m);
        if (m == "gaussian") c.run_gaussian = true;
        else if (m == "dm") c.run_dm = true;
        else rd.problem(w + ": unknown method '" + m + "' (expected gaussian, dm)");
      }
    });
  }
  // [sensing]
  {
    const auto& s = section("sensing");
    rd.get(s, "sensing", "band", [&](const auto& w, const auto& v) {
      try {
        c.sensing.band = dsp::parse_purpose(trim(v));
      } catch (const Error& e) {
        rd.problem(w + ": " + e.what());
      }
    });
    rd.get(s, "sensing", "trials", [&](const auto& w, const auto& v) { c.sensing.trials = to_count(rd.number(w, v)); });
    rd.get(s, "sensing", "snr_db", [&](const auto& w, const auto& v) {
      c.sensing.snr_db = trim(v) == "off" ? std::numeric_limits<double>::quiet_NaN() : rd.number(w, v);
    });
    rd.get(s, "sensing", "trace_rate", [&](const auto& w, const auto& v) { c.sensing.tier.rate = rd.number(w, v); });
    rd.get(s, "sensing", "duration_s", [&](const auto& w, const auto& v) { c.sensing.tier.duration_s = rd.number(w, v); });
    rd.get(s, "sensing", "residual_offset_hz",
           [&](const auto& w, const auto& v) { c.sensing.tier.residual_offset_hz = rd.number(w, v); });
    rd.get(s, "sensing", "pilot_snr_db", [&](const auto& w, const auto& v) { c.sensing.tier.pilot_snr_db = rd.number(w, v); });
    rd.get(s, "sensing", "probe_snr_db", [&](const auto& w, const auto& v) { c.sensing.tier.probe_snr_db = rd.number(w, v); });
    rd.get(s, "sensing", "gate_s", [&](const auto& w, const auto& v) { c.sensing.gate_s = rd.number(w, v); });
  }
  // [event], [event.*] in name order.
  for (const auto& [name, sec] : tree) {
    if (!is_event_section(name)) continue;
    channel::VibrationEvent ev;
    rd.get(sec, name, "position_km", [&](const auto& w, const auto& v) { ev.position_km = rd.number(w, v); });
    rd.get(sec, name, "kind", [&](const auto& w, const auto& v) {
      const auto k = trim(v);
      if (k == "burst") ev.kind = channel::VibrationKind::kBurst;
      else if (k == "sinusoid") ev.kind = channel::VibrationKind::kSinusoid;
      else rd.problem(w + ": unknown kind '" + k + "' (expected burst, sinusoid)");
    });
    rd.get(sec, name, "frequency_hz", [&](const auto& w, const auto& v) { ev.frequency_hz = rd.number(w, v); });
    rd.get(sec, name, "amplitude_rad", [&](const auto& w, const auto& v) { ev.amplitude_rad = rd.number(w, v); });
    rd.get(sec, name, "start_s", [&](const auto& w, const auto& v) { ev.start_s = rd.number(w, v); });
    rd.get(sec, name, "duration_s", [&](const auto& w, const auto& v) { ev.duration_s = rd.number(w, v); });
    c.events.push_back(ev);
  }

  // Cross-section invariants, all collected.
  c.plan.amplitudes.clear();
  for (const auto& u : c.users) c.plan.amplitudes.push_back(std::sqrt(std::max(0.0, u.modulation_variance) / 2.0));
  collect(problems, "plan", [&] { c.plan.validate(); });
  if (c.plan.n_users > 0 && problems.empty()) {
    c.bank = filternet::make_bank(c.plan, c.filter_linewidth_hz, c.filter_fsr_hz, c.residual_reflectivity, filter_core);
    // The bank shares one geometry, so one report covers every filter.
    const auto rep = filternet::validate_design(c.bank.front(), c.plan);
    if (!rep.fsr.pass) problems.push_back("filter design rule violated: " + rep.fsr.detail);
    if (!rep.linewidth.pass) problems.push_back("filter design rule violated: " + rep.linewidth.detail);
    if (!(c.residual_reflectivity >= 0.0 && c.residual_reflectivity < 1.0))
      problems.push_back("filter: residual reflectivity must lie in [0, 1)");
  }
  collect(problems, "modulator", [&] { c.modulator().validate(); });
  collect(problems, "channel", [&] { c.link.validate(); });
  collect(problems, "noise", [&] { c.noise.validate(); });
  collect(problems, "keyrate", [&] { c.keyrate.validate(); });
  if (!(c.detector_bandwidth_hz > 0.0)) problems.push_back("receiver: detector bandwidth must be > 0");
  for (std::size_t j = 0; j < c.users.size(); ++j) {
    const auto& u = c.users[j];
    const std::string who = "user " + std::to_string(j + 1);
    if (!(u.modulation_variance > 0.0)) problems.push_back(who + ": modulation variance must be > 0");
    if (!(u.excess_noise >= 0.0)) problems.push_back(who + ": excess noise must be >= 0");
    collect(problems, who, [&] { c.detector(j).validate(); });
    if (std::isfinite(u.loss_offset_db) && c.link.length_km >= 0.0) {
      const double T = c.user_transmittance(j);
      if (!(T > 0.0 && T <= 1.0)) problems.push_back(who + ": transmittance " + std::to_string(T) + " outside (0, 1]");
    } else {
      problems.push_back(who + ": loss offset must be finite");
    }
  }
  for (std::size_t e = 0; e < c.events.size(); ++e)
    collect(problems, "event " + std::to_string(e + 1), [&] { c.events[e].validate(c.sensing.tier.rate, c.link.length_km); });
  if (c.qkd_slots < keyrate::kMinEstimationSlots) problems.push_back("run: qkd_slots must be >= 100000");
  if (c.field_symbols < 64) problems.push_back("run: field_symbols must be >= 64");
  if (c.bootstrap_resamples < 2) problems.push_back("run: bootstrap_resamples must be >= 2");
  if (c.sensing.trials < 1) problems.push_back("sensing: trials must be >= 1");
  if (!(c.sensing.tier.rate > 0.0) || !(c.sensing.tier.duration_s > 0.0))
    problems.push_back("sensing: trace rate and duration must be > 0");
  if (c.output_dir.empty()) problems.push_back("run: output_dir is empty");

  if (!problems.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
  }
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "off";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class F>
std::string join_users(const ScenarioConfig& c, F&& f) {
  std::string out;
  for (std::size_t j = 0; j < c.users.size(); ++j) out += (j ? ", " : "") + num(f(c.users[j]));
  return out;
}

}  // namespace

std::string to_ini(const ScenarioConfig& c) {
  std::ostringstream o;
  o << "[run]\nseed = " << c.seed << "\noutput_dir = " << c.output_dir << "\nqkd_slots = " << c.qkd_slots
    << "\nfield_symbols = " << c.field_symbols << "\nbootstrap_resamples = " << c.bootstrap_resamples
    << "\nthreads = " << c.threads << "\n\n";
  o << "[plan]\nn_users = " << c.plan.n_users << "\nbase_freq_hz = " << num(c.plan.base_freq_hz)
    << "\nspacing_hz = " << num(c.plan.spacing_hz) << "\nbaud = " << num(c.plan.baud)
    << "\nsignal_bandwidth_hz = " << num(c.plan.signal_bandwidth_hz) << "\npilot_offset_hz = " << num(c.plan.pilot_offset_hz)
    << "\npilot_amplitude = " << num(c.plan.pilot_amplitude) << "\nrolloff = " << num(c.plan.rolloff)
    << "\nsample_rate = " << num(c.plan.sample_rate) << "\n\n";
  o << "[modulator]\nsuppression_db = " << num(c.modulator_suppression_db) << "\nmean_depth = " << num(c.modulator_depth)
    << "\n\n";
  o << "[filter]\nlinewidth_hz = " << num(c.filter_linewidth_hz) << "\nfsr_hz = " << num(c.filter_fsr_hz)
    << "\nresidual_reflectivity = " << num(c.residual_reflectivity)
    << "\ncore_index = " << num(c.bank.empty() ? kDefaultCoreIndex : c.bank.front().core_index) << "\n\n";
  o << "[channel]\nlength_km = " << num(c.link.length_km) << "\nloss_db_per_km = " << num(c.link.loss_db_per_km)
    << "\ncore_index = " << num(c.link.core_index) << "\n\n";
  o << "[noise]\nserver_linewidth_hz = " << num(c.noise.server_linewidth_hz)
    << "\nlo_linewidth_hz = " << num(c.noise.lo_linewidth_hz) << "\nsystem_phase_psd = " << num(c.noise.system_phase_psd)
    << "\neps_freq = " << num(c.noise.eps_freq) << "\neps_filt = " << num(c.noise.eps_filt)
    << "\nprobe_power_dbm = " << num(c.noise.probe_power_dbm) << "\n\n";
  o << "[receiver]\nlo_offset_hz = " << num(c.lo.offset_hz) << "\ndetector_bandwidth_hz = " << num(c.detector_bandwidth_hz)
    << "\n\n";
  o << "[users]\nmodulation_variance = " << join_users(c, [](auto& u) { return u.modulation_variance; })
    << "\nefficiency = " << join_users(c, [](auto& u) { return u.efficiency; })
    << "\nelectronic_noise = " << join_users(c, [](auto& u) { return u.electronic_noise; })
    << "\nexcess_noise = " << join_users(c, [](auto& u) { return u.excess_noise; })
    << "\nloss_offset_db = " << join_users(c, [](auto& u) { return u.loss_offset_db; }) << "\n\n";
  std::string methods;
  if (c.run_gaussian) methods = "gaussian";
  if (c.run_dm) methods += methods.empty() ? "dm" : ", dm";
  o << "[keyrate]\nrate_baud = " << num(c.keyrate.rate_baud) << "\nbeta = " << num(c.keyrate.beta)
    << "\np_pass = " << num(c.keyrate.p_pass)
    << "\ndelta_ec = " << (std::isnan(c.keyrate.delta_ec) ? std::string("auto") : num(c.keyrate.delta_ec))
    << "\nfock_cutoff = " << c.keyrate.fock_cutoff << "\nmax_iterations = " << c.keyrate.max_iterations
    << "\ngap_tolerance = " << num(c.keyrate.gap_tolerance) << "\nmethods = " << methods
    << "\ninputs = " << (c.keyrate_from_estimate ? "estimated" : "configured") << "\n\n";
  o << "[sensing]\nband = " << dsp::purpose_name(c.sensing.band) << "\ntrials = " << c.sensing.trials
    << "\nsnr_db = " << (std::isnan(c.sensing.snr_db) ? std::string("off") : num(c.sensing.snr_db))
    << "\ntrace_rate = " << num(c.sensing.tier.rate) << "\nduration_s = " << num(c.sensing.tier.duration_s)
    << "\nresidual_offset_hz = " << num(c.sensing.tier.residual_offset_hz)
    << "\npilot_snr_db = " << num(c.sensing.tier.pilot_snr_db) << "\nprobe_snr_db = " << num(c.sensing.tier.probe_snr_db)
    << "\ngate_s = " << num(c.sensing.gate_s) << "\n";
  for (std::size_t e = 0; e < c.events.size(); ++e) {
    const auto& ev = c.events[e];
    char name[32];
    std::snprintf(name, sizeof name, "event.%03zu", e + 1);
    o << "\n[" << name << "]\nposition_km = " << num(ev.position_km)
      << "\nkind = " << (ev.kind == channel::VibrationKind::kBurst ? "burst" : "sinusoid")
      << "\nfrequency_hz = " << num(ev.frequency_hz) << "\namplitude_rad = " << num(ev.amplitude_rad)
      << "\nstart_s = " << num(ev.start_s) << "\nduration_s = " << num(ev.duration_s) << "\n";
  }
  return o.str();
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256: digest failed");
  std::ostringstream s;
  for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return s.str();
}

std::string config_hash(const ScenarioConfig& cfg) { return sha256_hex(to_ini(cfg)); }

}  // namespace dqan::cli
