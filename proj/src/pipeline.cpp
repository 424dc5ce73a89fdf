// SPDX-License-Identifier: Apache-2.0
#include "dqan/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "dqan/dsp.hpp"
#include "dqan/encoder.hpp"
#include "dqan/filternet.hpp"
#include "dqan/parallel.hpp"
#include "json.hpp"

#ifndef DQAN_VERSION
#define DQAN_VERSION "0.0.0"
#endif

namespace dqan::cli {

using nlohmann::json;

std::string version() { return DQAN_VERSION; }

Mode parse_mode(std::string_view name) {
  if (name == "qkd") return Mode::kQkd;
  if (name == "sensing") return Mode::kSensing;
  if (name == "both") return Mode::kBoth;
  throw ConfigError("unknown mode '" + std::string(name) + "' (expected qkd, sensing, both)");
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::kQkd: return "qkd";
    case Mode::kSensing: return "sensing";
    case Mode::kBoth: return "both";
  }
  return "?";
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

template <class Fn>
auto with_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    throw ConfigError(stage + ": " + e.what());
  } catch (const SolverError& e) {
    throw SolverError(stage + ": " + e.what(), e.last_gap(), e.iterations());
  } catch (const NoDetection& e) {
    throw NoDetection(stage + ": " + e.what(), e.peak());
  } catch (const LockFailure& e) {
    throw LockFailure(stage + ": " + e.what());
  } catch (const Error& e) {
    throw Error(stage + ": " + e.what());
  }
}

// Loss offset as an amplitude factor.
double offset_amplitude(const UserParams& u) { return std::pow(10.0, -u.loss_offset_db / 20.0); }

channel::NoiseSpec user_noise(const ScenarioConfig& cfg, std::size_t user, double* total_eps,
                              channel::ExcessNoiseBudget* budget_out) {
  const auto budget = channel::excess_noise_budget(cfg.noise, cfg.users.at(user).excess_noise);
  channel::NoiseSpec n = cfg.noise;
  n.excess_noise = budget.total();
  if (total_eps) *total_eps = budget.total();
  if (budget_out) *budget_out = budget;
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Field tier

std::vector<FieldTierResult> run_field_tier(const ScenarioConfig& cfg, std::uint64_t seed,
                                            const FieldTierOptions& opt) {
  const auto& plan = cfg.plan;
  const auto frame = encoder::generate_symbols(plan, cfg.field_symbols, derive_seed(seed, "field.symbols"));
  const auto drive = encoder::build_baseband_waveform(frame, plan);
  encoder::IqModulatorModel mod = cfg.modulator();
  if (opt.ideal_modulator) mod.imbalance = mod.bias_phase_error = 0.0;
  const auto field = encoder::iq_modulate(drive, mod);

  std::vector<OpticalField> drops;
  if (opt.bypass_filters) drops.assign(plan.n_users, field);
  else drops = filternet::cascade(field, cfg.bank);

  // Decimate the receiver baseband to an integer number of samples per symbol.
  std::size_t decim = 1;
  for (std::size_t d = 8; d >= 1; --d) {
    if (plan.samples_per_symbol() % d == 0 && plan.sample_rate / static_cast<double>(d) / 2.0 > plan.pilot_offset_hz) {
      decim = d;
      break;
    }
  }
  const double sig_cut = (1.0 + plan.rolloff) * plan.baud / 2.0;
  const double sig_trans = std::min(10e6, 0.5 * (plan.pilot_offset_hz - sig_cut));
  const double pilot_cut = std::min(5e6, 0.25 * (plan.pilot_offset_hz - sig_cut));
  const double search_half = std::min(20e6, 0.5 * (plan.pilot_offset_hz - sig_cut));

  std::vector<FieldTierResult> out(plan.n_users);
  parallel_for(plan.n_users, cfg.threads, [&](std::size_t j) {
    with_stage("field tier, user " + std::to_string(j + 1), [&] {
      OpticalField f = drops[j];
      double delay = 0.0;
      if (!opt.back_to_back) {
        const double a = offset_amplitude(cfg.users[j]);
        for (auto& v : f.samples) v *= a;
        channel::NoiseSpec noise = user_noise(cfg, j, nullptr, nullptr);
        if (opt.noiseless) {
          noise = channel::NoiseSpec{};
          noise.server_linewidth_hz = noise.lo_linewidth_hz = 0.0;
        }
        f = channel::propagate(f, cfg.link, noise, cfg.events, channel::Direction::kForward,
                               derive_seed(seed, "field.channel", j));
        delay = cfg.link.delay_s();
      }
      dsp::DetectorSpec det = cfg.detector(j);
      dsp::LoSpec lo = cfg.lo;
      if (opt.noiseless) {
        det.shot_noise = false;
        det.electronic_noise = 0.0;
        lo.linewidth_hz = 0.0;
      }
      const double highest_if = plan.highest_frequency() + plan.pilot_offset_hz - lo.offset_hz;
      const auto het = dsp::heterodyne_detect(f, lo, det, derive_seed(seed, "field.detect", j), highest_if);
      const double pilot_if = plan.pilot_frequency(j) - lo.offset_hz;
      const double f_est = dsp::estimate_frequency_offset(het, pilot_if - search_half, pilot_if + search_half);
      const auto pilot = dsp::downconvert(het, f_est, pilot_cut, pilot_cut, decim);
      const auto phase = dsp::estimate_phase(pilot, TraceOrigin::kPilot);
      const auto sig = dsp::downconvert(het, f_est - plan.pilot_offset_hz, sig_cut, sig_trans, decim);

      dsp::SlotTiming timing;
      timing.first_slot_time = f.start_time;
      timing.baud = plan.baud;
      timing.rolloff = plan.rolloff;
      timing.n_slots = frame.n_slots;
      timing.pilot_offset_hz = plan.pilot_offset_hz;
      timing.propagation_delay = delay;
      const auto g = dsp::matched_filter_outputs(sig, phase, timing);

      Complex num{};
      double den = 0.0;
      for (std::size_t s = 0; s < g.size(); ++s) {
        const Complex a = frame.amplitude(plan, j, s);
        num += g[s] * std::conj(a);
        den += std::norm(a);
      }
      const Complex gain = num / den;
      double err = 0.0, ref = 0.0;
      for (std::size_t s = 0; s < g.size(); ++s) {
        const Complex r = gain * frame.amplitude(plan, j, s);
        err += std::norm(g[s] - r);
        ref += std::norm(r);
      }
      FieldTierResult res;
      res.user = j;
      res.symbols = g.size();
      res.pilot_if_hz = f_est;
      res.frequency_error_hz = f_est - pilot_if;
      res.gain = std::abs(gain);
      res.evm = ref > 0.0 ? std::sqrt(err / ref) : std::numeric_limits<double>::infinity();
      res.phase_slips = phase.phase_slips;
      out[j] = res;
      return 0;
    });
  });
  return out;
}

// ---------------------------------------------------------------------------
// Symbol tier and key rates

UserQkdResult run_qkd_user(const ScenarioConfig& cfg, std::size_t j, std::uint64_t seed) {
  const auto& u = cfg.users.at(j);
  UserQkdResult r;
  r.user = j;
  r.transmittance = cfg.user_transmittance(j);
  user_noise(cfg, j, &r.excess_noise, &r.budget);

  keyrate::KeyRateParams kp = cfg.keyrate;
  kp.efficiency = u.efficiency;
  kp.electronic_noise = u.electronic_noise;

  // Only this user's row is needed; the frame generator is per-user seeded,
  // so a one-user plan at the same index would change the stream. Draw the
  // full frame once per call instead.
  const auto frame = encoder::generate_symbols(cfg.plan, cfg.qkd_slots, derive_seed(seed, "qkd.symbols"));
  ComplexVec alpha(cfg.qkd_slots);
  for (std::size_t s = 0; s < alpha.size(); ++s) alpha[s] = frame.amplitude(cfg.plan, j, s);

  const auto q = with_stage("qkd user " + std::to_string(j + 1) + " detection", [&] {
    return dsp::simulate_heterodyne_symbols(alpha, r.transmittance, r.excess_noise, cfg.detector(j),
                                            derive_seed(seed, "qkd.detect"), j);
  });
  r.estimate = with_stage("qkd user " + std::to_string(j + 1) + " estimation",
                          [&] { return keyrate::estimate_channel_params(alpha, q, kp); });
  r.estimate.user = j;
  r.spread = with_stage("qkd user " + std::to_string(j + 1) + " bootstrap", [&] {
    return keyrate::bootstrap_channel_params(alpha, q, kp, cfg.bootstrap_resamples,
                                             derive_seed(seed, "qkd.bootstrap", j));
  });

  r.corrections.g1 = encoder::sideband_ratio(cfg.modulator());
  const auto xt = filternet::crosstalk_fractions(cfg.bank.at(j), cfg.plan, j);
  r.corrections.s_lower = xt.lower;
  r.corrections.s_upper = xt.upper;
  r.correction = keyrate::correction_factor(r.corrections);

  keyrate::ChannelEstimate in;
  if (cfg.keyrate_from_estimate) {
    in = r.estimate;
  } else {
    in.transmittance = r.transmittance;
    in.excess_noise = r.excess_noise;
    in.modulation_variance = u.modulation_variance;
    in.user = j;
    in.slots = cfg.qkd_slots;
  }
  const std::string who = "qkd user " + std::to_string(j + 1);
  if (cfg.run_gaussian)
    r.gaussian = with_stage(who + " gaussian", [&] { return keyrate::gaussian_keyrate(in, kp, r.corrections); });
  if (cfg.run_dm) r.dm = with_stage(who + " dm-sdp", [&] { return keyrate::dm_keyrate_sdp(in, kp, r.corrections); });
  r.plob = keyrate::plob_report(in.transmittance, kp);
  r.plob.user = j;
  return r;
}

sensing::SensingScenario sensing_scenario(const ScenarioConfig& cfg) {
  if (cfg.events.empty()) throw ConfigError("sensing mode needs at least one [event] section");
  sensing::SensingScenario sc;
  sc.link = cfg.link;
  sc.noise = cfg.noise;
  sc.tier = cfg.sensing.tier;
  sc.event = cfg.events.front();
  sc.band = cfg.sensing.band;
  sc.gate_s = cfg.sensing.gate_s < 0.0 ? sc.event.duration_s : cfg.sensing.gate_s;
  if (!std::isnan(cfg.sensing.snr_db)) sensing::set_band_snr(sc, cfg.sensing.snr_db);
  return sc;
}

double RunReport::average_bps(keyrate::Method m) const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& u : users) {
    const std::optional<keyrate::KeyRateReport>* rep = nullptr;
    if (m == keyrate::Method::kGaussian) rep = &u.gaussian;
    else if (m == keyrate::Method::kDmSdp) rep = &u.dm;
    if (m == keyrate::Method::kPlob) {
      s += u.plob.bits_per_second;
      ++n;
    } else if (rep && rep->has_value()) {
      s += (*rep)->bits_per_second;
      ++n;
    }
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

RunReport run_scenario(const ScenarioConfig& cfg, Mode mode, const RunOptions& opt) {
  ScenarioConfig c = cfg;
  if (opt.threads) c.threads = opt.threads;
  RunReport rep;
  rep.version = version();
  rep.config_hash = config_hash(cfg);
  rep.seed = cfg.seed;
  rep.mode = mode;
  rep.length_km = cfg.link.length_km;
  const auto t_all = Clock::now();

  if (mode != Mode::kSensing) {
    auto t0 = Clock::now();
    rep.users.resize(c.plan.n_users);
    parallel_for(c.plan.n_users, c.threads, [&](std::size_t j) { rep.users[j] = run_qkd_user(c, j, c.seed); });
    rep.timing_s["qkd"] = seconds_since(t0);
    if (opt.field_tier) {
      t0 = Clock::now();
      const auto field = run_field_tier(c, c.seed);
      for (std::size_t j = 0; j < field.size(); ++j) rep.users[j].field = field[j];
      rep.timing_s["field_tier"] = seconds_since(t0);
    }
  }
  if (mode != Mode::kQkd) {
    const auto t0 = Clock::now();
    SensingRun run;
    run.scenario = with_stage("sensing", [&] { return sensing_scenario(c); });
    run.summary = with_stage("sensing", [&] {
      return sensing::resolution_trial(run.scenario, c.sensing.trials, derive_seed(c.seed, "sensing"), c.threads);
    });
    rep.sensing = std::move(run);
    rep.timing_s["sensing"] = seconds_since(t0);
  }
  rep.timing_s["total"] = seconds_since(t_all);
  return rep;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return nullptr;
  return v > 0 ? "inf" : "-inf";
}

json keyrate_json(const keyrate::KeyRateReport& k) {
  json j;
  j["method"] = keyrate::method_name(k.method);
  j["bits_per_symbol"] = num(k.bits_per_symbol);
  j["bits_per_second"] = num(k.bits_per_second);
  j["clamped"] = k.clamped;
  j["infinite"] = k.infinite;
  if (k.method == keyrate::Method::kDmSdp) {
    j["iterations"] = k.iterations;
    j["gap"] = num(k.gap);
    j["objective"] = num(k.objective);
    j["lower_bound"] = num(k.lower_bound);
    j["delta_ec"] = num(k.delta_ec);
  }
  return j;
}

json user_json(const UserQkdResult& u) {
  json j;
  j["user"] = u.user + 1;
  j["transmittance"] = num(u.transmittance);
  j["excess_noise"] = num(u.excess_noise);
  j["excess_noise_budget"] = {{"cv_qkd", num(u.budget.cv_qkd)},
                              {"sasrs", num(u.budget.sasrs)},
                              {"freq", num(u.budget.freq)},
                              {"filt", num(u.budget.filt)}};
  j["estimate"] = {{"transmittance", num(u.estimate.transmittance)},
                   {"transmittance_se", num(u.spread.transmittance_se)},
                   {"excess_noise", num(u.estimate.excess_noise)},
                   {"excess_noise_se", num(u.spread.excess_noise_se)},
                   {"modulation_variance", num(u.estimate.modulation_variance)},
                   {"excess_noise_clamped", u.estimate.excess_noise_clamped},
                   {"transmittance_clamped", u.estimate.transmittance_clamped},
                   {"slots", u.estimate.slots}};
  j["corrections"] = {{"g1", num(u.corrections.g1)},
                      {"s_lower", num(u.corrections.s_lower)},
                      {"s_upper", num(u.corrections.s_upper)},
                      {"g", num(u.correction)}};
  json rates = json::object();
  if (u.gaussian) rates["gaussian"] = keyrate_json(*u.gaussian);
  if (u.dm) rates["dm-sdp"] = keyrate_json(*u.dm);
  rates["plob"] = keyrate_json(u.plob);
  j["keyrates"] = rates;
  if (u.field) {
    j["field_tier"] = {{"symbols", u.field->symbols},
                       {"pilot_if_hz", num(u.field->pilot_if_hz)},
                       {"frequency_error_hz", num(u.field->frequency_error_hz)},
                       {"gain", num(u.field->gain)},
                       {"evm", num(u.field->evm)},
                       {"phase_slips", u.field->phase_slips}};
  }
  return j;
}

json sensing_json(const SensingRun& s) {
  const auto& sc = s.scenario;
  const auto& m = s.summary;
  json j;
  j["band"] = dsp::purpose_name(sc.band);
  j["event"] = {{"position_km", num(sc.event.position_km)},
                {"frequency_hz", num(sc.event.frequency_hz)},
                {"amplitude_rad", num(sc.event.amplitude_rad)},
                {"start_s", num(sc.event.start_s)},
                {"duration_s", num(sc.event.duration_s)}};
  j["trials"] = m.trials.size();
  j["detected"] = m.detected;
  j["censored"] = m.censored;
  j["mean_error_m"] = num(m.mean_error_m);
  j["rms_error_m"] = num(m.rms_error_m);
  j["p95_abs_error_m"] = num(m.p95_abs_error_m);
  j["fwhm_m"] = num(m.fwhm_m);
  j["separation_m"] = num(m.separation_m);
  json results = json::array();
  for (const auto& t : m.trials)
    results.push_back({{"trial", t.trial},
                       {"truth_km", num(t.truth_km)},
                       {"estimate_km", num(t.estimate_km)},
                       {"error_m", num(t.error_m)},
                       {"peak", num(t.peak)},
                       {"detected", t.detected}});
  j["localization"] = results;
  return j;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

std::string opt_bps(const std::optional<keyrate::KeyRateReport>& r) {
  return r ? fmt(r->bits_per_second) : std::string();
}

void write_file(const std::filesystem::path& p, const std::string& text, std::vector<std::string>& written) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write '" + p.string() + "'");
  out << text;
  if (!out) throw Error("write failed for '" + p.string() + "'");
  written.push_back(p.string());
}

}  // namespace

std::string report_json(const RunReport& r) {
  json j;
  j["schema"] = r.schema;
  j["version"] = r.version;
  j["config_hash"] = r.config_hash;
  j["seed"] = r.seed;
  j["mode"] = mode_name(r.mode);
  j["length_km"] = num(r.length_km);
  if (r.mode != Mode::kSensing) {
    json users = json::array();
    for (const auto& u : r.users) users.push_back(user_json(u));
    j["users"] = users;
    j["average_bps"] = {{"gaussian", num(r.average_bps(keyrate::Method::kGaussian))},
                        {"dm-sdp", num(r.average_bps(keyrate::Method::kDmSdp))},
                        {"plob", num(r.average_bps(keyrate::Method::kPlob))}};
  }
  if (r.sensing) j["sensing"] = sensing_json(*r.sensing);
  return j.dump(2) + "\n";
}

std::string keyrate_csv(const RunReport& r) {
  std::ostringstream o;
  o << "user,T,eps,eps_est,eps_se,g,K_gauss_bps,K_dm_bps,K_plob_bps\n";
  for (const auto& u : r.users)
    o << u.user + 1 << ',' << fmt(u.transmittance) << ',' << fmt(u.excess_noise) << ','
      << fmt(u.estimate.excess_noise) << ',' << fmt(u.spread.excess_noise_se) << ',' << fmt(u.correction) << ','
      << opt_bps(u.gaussian) << ',' << opt_bps(u.dm) << ',' << fmt(u.plob.bits_per_second) << '\n';
  return o.str();
}

std::string field_tier_csv(const RunReport& r) {
  std::ostringstream o;
  o << "user,symbols,pilot_if_hz,frequency_error_hz,gain,evm,phase_slips\n";
  for (const auto& u : r.users) {
    if (!u.field) continue;
    const auto& f = *u.field;
    o << u.user + 1 << ',' << f.symbols << ',' << fmt(f.pilot_if_hz) << ',' << fmt(f.frequency_error_hz) << ','
      << fmt(f.gain) << ',' << fmt(f.evm) << ',' << f.phase_slips << '\n';
  }
  return o.str();
}

std::string trials_csv(const RunReport& r) {
  std::ostringstream o;
  o << "trial,truth_km,est_km,err_m,peak\n";
  if (r.sensing)
    for (const auto& t : r.sensing->summary.trials)
      o << t.trial << ',' << fmt(t.truth_km) << ',' << fmt(t.estimate_km) << ',' << fmt(t.error_m) << ','
        << fmt(t.peak) << '\n';
  return o.str();
}

std::string sensing_summary_json(const RunReport& r) {
  if (!r.sensing) return "{}\n";
  json j = sensing_json(*r.sensing);
  j.erase("localization");
  return j.dump(2) + "\n";
}

std::string filter_bank_csv(const ScenarioConfig& cfg, std::size_t points) {
  if (points < 2) throw InputError("filter_bank_csv: need at least two points");
  std::ostringstream o;
  o << "f_Hz";
  for (std::size_t j = 0; j < cfg.bank.size(); ++j) o << ",t_" << j;
  o << '\n';
  const double hi = cfg.plan.highest_frequency() + cfg.plan.spacing_hz;
  const double lo = std::max(0.0, cfg.plan.base_freq_hz - cfg.plan.spacing_hz);
  for (std::size_t k = 0; k < points; ++k) {
    const double f = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    o << fmt(f);
    for (const auto& spec : cfg.bank) o << ',' << fmt(filternet::port_transfer(spec, f).first);
    o << '\n';
  }
  return o.str();
}

std::vector<std::string> write_run_artifacts(const RunReport& r, const ScenarioConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  const fs::path d(dir);
  const std::string report = report_json(r);
  write_file(d / "report.json", report, written);
  write_file(d / "report.sha256", sha256_hex(report) + "  report.json\n", written);
  write_file(d / "config.ini", to_ini(cfg), written);
  json t = json::object();
  for (const auto& [k, v] : r.timing_s) t[k] = v;
  write_file(d / "timing.json", t.dump(2) + "\n", written);
  if (r.mode != Mode::kSensing) {
    write_file(d / "keyrates.csv", keyrate_csv(r), written);
    write_file(d / "field_tier.csv", field_tier_csv(r), written);
    write_file(d / "filter_bank.csv", filter_bank_csv(cfg), written);
  }
  if (r.sensing) {
    write_file(d / "localization.csv", trials_csv(r), written);
    write_file(d / "sensing_summary.json", sensing_summary_json(r), written);
  }
  return written;
}

std::vector<std::string> write_debug_artifacts(const ScenarioConfig& cfg, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  std::vector<std::string> written;
  const fs::path d(dir);

  // Transmitted field, float32 little-endian interleaved I/Q.
  const auto frame = encoder::generate_symbols(cfg.plan, cfg.field_symbols, derive_seed(cfg.seed, "field.symbols"));
  const auto field = encoder::iq_modulate(encoder::build_baseband_waveform(frame, cfg.plan), cfg.modulator());
  double peak = 0.0;
  for (const auto& v : field.samples) peak = std::max({peak, std::abs(v.real()), std::abs(v.imag())});
  const double scale = peak > 0.0 ? peak : 1.0;
  {
    std::string buf(field.size() * 8, '\0');
    for (std::size_t k = 0; k < field.size(); ++k) {
      const float iq[2] = {static_cast<float>(field.samples[k].real() / scale),
                           static_cast<float>(field.samples[k].imag() / scale)};
      std::uint32_t w[2];
      std::memcpy(w, iq, sizeof w);
      for (int c = 0; c < 2; ++c)
        for (int b = 0; b < 4; ++b) buf[k * 8 + static_cast<std::size_t>(c) * 4 + static_cast<std::size_t>(b)] =
            static_cast<char>((w[c] >> (8 * b)) & 0xffu);
    }
    write_file(d / "waveform.iq", buf, written);
    json side = {{"sample_rate", field.sample_rate},
                 {"scale", scale},
                 {"format", "float32le interleaved I/Q"},
                 {"samples", field.size()},
                 {"units", "sqrt(photons/s) after multiplying by scale"}};
    write_file(d / "waveform.json", side.dump(2) + "\n", written);
  }

  // One sensing trace pair, if an event is configured.
  if (!cfg.events.empty()) {
    const auto sc = sensing_scenario(cfg);
    const auto traces = channel::simulate_phase_traces(sc.link, sc.noise, {sc.event}, sc.tier,
                                                       derive_seed(cfg.seed, "debug.traces"));
    const auto ps = dsp::estimate_phase(traces.server_probe, TraceOrigin::kProbe);
    const auto pu = dsp::estimate_phase(traces.user_pilot, TraceOrigin::kPilot);
    for (const auto& [name, tr] : {std::pair{"server", &ps}, std::pair{"user", &pu}}) {
      std::ostringstream o;
      o << "t_s,phi_rad\n" << std::setprecision(12);
      for (std::size_t k = 0; k < tr->size(); ++k) o << tr->time_at(k) << ',' << tr->samples[k] << '\n';
      write_file(d / (std::string("phase_") + name + ".csv"), o.str(), written);
      std::string bin(tr->size() * 8, '\0');
      for (std::size_t k = 0; k < tr->size(); ++k) {
        std::uint64_t w;
        std::memcpy(&w, &tr->samples[k], 8);
        for (int b = 0; b < 8; ++b) bin[k * 8 + static_cast<std::size_t>(b)] = static_cast<char>((w >> (8 * b)) & 0xffu);
      }
      write_file(d / (std::string("phase_") + name + ".f64"), bin, written);
    }
  }

  // Digital filter responses.
  for (auto p : {dsp::FilterPurpose::kVib100Hz, dsp::FilterPurpose::kVib1kHz, dsp::FilterPurpose::kVib10kHz}) {
    const auto des = dsp::design_filter(p, cfg.sensing.tier.rate);
    std::ostringstream o;
    o << "f_Hz,mag_dB,phase_rad\n" << std::setprecision(10);
    const double fmax = std::min(cfg.sensing.tier.rate / 2.0, 4.0 * std::max(des.high_hz, 1.0));
    constexpr int kPoints = 2001;
    for (int k = 0; k < kPoints; ++k) {
      const double f = fmax * k / (kPoints - 1);
      const Complex h = des.response(f);
      o << f << ',' << 20.0 * std::log10(std::max(std::abs(h), 1e-300)) << ',' << std::arg(h) << '\n';
    }
    write_file(d / ("filter_" + dsp::purpose_name(p) + ".csv"), o.str(), written);
  }
  return written;
}

// ---------------------------------------------------------------------------
// Sweeps

SweepVar parse_sweep_var(std::string_view name) {
  if (name == "distance") return SweepVar::kDistance;
  if (name == "probe_power") return SweepVar::kProbePower;
  if (name == "linewidth") return SweepVar::kLinewidth;
  if (name == "snr") return SweepVar::kSnr;
  throw ConfigError("unknown sweep variable '" + std::string(name) + "' (expected distance, probe_power, linewidth, snr)");
}

std::string sweep_var_name(SweepVar v) {
  switch (v) {
    case SweepVar::kDistance: return "distance";
    case SweepVar::kProbePower: return "probe_power";
    case SweepVar::kLinewidth: return "linewidth";
    case SweepVar::kSnr: return "snr";
  }
  return "?";
}

Mode sweep_mode(SweepVar v) {
  return v == SweepVar::kDistance || v == SweepVar::kProbePower ? Mode::kQkd : Mode::kSensing;
}

ScenarioConfig apply_sweep_value(const ScenarioConfig& cfg, SweepVar var, double value) {
  ScenarioConfig c = cfg;
  // Sensing is not run on qkd sweeps; a stored event past a shortened link
  // would otherwise reject the point.
  if (sweep_mode(var) == Mode::kQkd) c.events.clear();
  switch (var) {
    case SweepVar::kDistance: c.link.length_km = value; break;
    case SweepVar::kProbePower: c.noise.probe_power_dbm = value; break;
    case SweepVar::kLinewidth:
      c.noise.server_linewidth_hz = value;
      c.noise.lo_linewidth_hz = value;
      break;
    case SweepVar::kSnr: c.sensing.snr_db = value; break;
  }
  return parse_config(to_ini(c));
}

SweepResult sweep(const ScenarioConfig& cfg, SweepVar var, const std::vector<double>& grid, const RunOptions& opt) {
  if (grid.empty()) throw ConfigError("sweep: grid is empty");
  SweepResult res;
  res.var = var;
  for (double v : grid) {
    SweepPoint p;
    p.value = v;
    try {
      const auto c = apply_sweep_value(cfg, var, v);
      p.report = run_scenario(c, sweep_mode(var), opt);
      p.ok = true;
    } catch (const std::exception& e) {
      p.ok = false;
      p.error = e.what();
    }
    res.points.push_back(std::move(p));
  }
  return res;
}

namespace {

std::string csv_text(std::string s) {
  for (auto& ch : s)
    if (ch == '\n' || ch == '\r') ch = ' ';
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string sweep_csv(const SweepResult& s) {
  std::ostringstream o;
  const std::string var = sweep_var_name(s.var);
  if (sweep_mode(s.var) == Mode::kQkd) {
    o << var << ",user,L_km,T,eps,eps_est,eps_se,K_gauss_bps,K_dm_bps,K_plob_bps,status,error\n";
    for (const auto& p : s.points) {
      if (!p.ok) {
        o << fmt(p.value) << ",,,,,,,,,,failed," << csv_text(p.error) << '\n';
        continue;
      }
      for (const auto& u : p.report.users)
        o << fmt(p.value) << ',' << u.user + 1 << ',' << fmt(p.report.length_km) << ',' << fmt(u.transmittance) << ','
          << fmt(u.excess_noise) << ',' << fmt(u.estimate.excess_noise) << ',' << fmt(u.spread.excess_noise_se) << ','
          << opt_bps(u.gaussian) << ',' << opt_bps(u.dm) << ',' << fmt(u.plob.bits_per_second) << ",ok,\n";
    }
    return o.str();
  }
  o << var << ",band,trials,detected,rms_error_m,fwhm_m,status,error\n";
  for (const auto& p : s.points) {
    if (!p.ok || !p.report.sensing) {
      o << fmt(p.value) << ",,,,,,failed," << csv_text(p.error) << '\n';
      continue;
    }
    const auto& m = p.report.sensing->summary;
    o << fmt(p.value) << ',' << dsp::purpose_name(p.report.sensing->scenario.band) << ',' << m.trials.size() << ','
      << m.detected << ',' << fmt(m.rms_error_m) << ',' << fmt(m.fwhm_m) << ",ok,\n";
  }
  return o.str();
}

// ---------------------------------------------------------------------------
// Probe on/off comparison

bool ProbePair::overlapping() const {
  constexpr double z = 1.959963984540054;
  return std::abs(eps_on - eps_off) <= z * (se_on + se_off);
}

std::vector<ProbePair> probe_comparison(const ScenarioConfig& cfg, const std::vector<double>& distances_km,
                                        double probe_dbm, std::size_t user) {
  if (distances_km.empty()) throw ConfigError("probe comparison: no distances given");
  if (user >= cfg.users.size()) throw ConfigError("probe comparison: user index out of range");
  std::vector<ProbePair> out(distances_km.size());
  parallel_for(distances_km.size(), cfg.threads, [&](std::size_t i) {
    auto off = apply_sweep_value(cfg, SweepVar::kDistance, distances_km[i]);
    off.noise.probe_power_dbm = -std::numeric_limits<double>::infinity();
    off.run_gaussian = off.run_dm = false;
    auto on = off;
    on.noise.probe_power_dbm = probe_dbm;
    const std::uint64_t seed = derive_seed(cfg.seed, "probe.pair", i);
    const auto r_off = run_qkd_user(off, user, seed);
    const auto r_on = run_qkd_user(on, user, seed);
    ProbePair p;
    p.length_km = distances_km[i];
    p.eps_off = r_off.estimate.excess_noise;
    p.se_off = r_off.spread.excess_noise_se;
    p.eps_on = r_on.estimate.excess_noise;
    p.se_on = r_on.spread.excess_noise_se;
    p.raman_snu = r_on.budget.sasrs;
    out[i] = p;
  });
  return out;
}

std::string probe_pairs_csv(const std::vector<ProbePair>& pairs) {
  std::ostringstream o;
  o << "L_km,eps_off,se_off,eps_on,se_on,delta_eps,raman_snu,overlap\n";
  for (const auto& p : pairs)
    o << fmt(p.length_km) << ',' << fmt(p.eps_off) << ',' << fmt(p.se_off) << ',' << fmt(p.eps_on) << ','
      << fmt(p.se_on) << ',' << fmt(p.difference()) << ',' << fmt(p.raman_snu) << ',' << (p.overlapping() ? 1 : 0)
      << '\n';
  return o.str();
}

}  // namespace dqan::cli
