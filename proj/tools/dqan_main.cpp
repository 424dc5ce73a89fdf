// SPDX-License-Identifier: Apache-2.0
// dqan: validate a scenario, run it, or sweep one variable.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dqan/config.hpp"
#include "dqan/pipeline.hpp"

namespace {

using namespace dqan;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto a = item.find_first_not_of(" \t");
    if (a == std::string::npos) continue;
    item = item.substr(a, item.find_last_not_of(" \t") - a + 1);
    if (item == "off") {
      out.push_back(-std::numeric_limits<double>::infinity());
      continue;
    }
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != item.size()) throw ConfigError("grid value '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("sweep grid is empty");
  return out;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw Error("cannot write '" + p.string() + "'");
}

cli::ScenarioConfig load(const std::string& path, long long seed, const std::string& out) {
  auto cfg = cli::load_config(path);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (!out.empty()) cfg.output_dir = out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downstream quantum access network simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", cli::version());

  std::string cfg_path, out_dir, mode_text = "both", var_text = "distance", grid_text;
  long long seed = -1;
  unsigned threads = 0;
  bool debug = false, no_field = false, probe_pair = false;
  double probe_dbm = channel::kRamanAnchorDbm;
  std::size_t probe_user = 1;

  auto* validate = app.add_subcommand("validate", "Check a config and print its canonical form");
  validate->add_option("config", cfg_path, "Scenario file")->required();

  auto* run = app.add_subcommand("run", "Run one scenario");
  run->add_option("config", cfg_path, "Scenario file")->required();
  run->add_option("--mode", mode_text, "qkd, sensing or both")->check(CLI::IsMember({"qkd", "sensing", "both"}));
  run->add_option("--seed", seed, "Master seed (overrides the config)");
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--threads", threads, "Worker threads, 0 = config value");
  run->add_flag("--debug", debug, "Also write intermediate products");
  run->add_flag("--no-field-tier", no_field, "Skip the full-band field frame");

  auto* sw = app.add_subcommand("sweep", "Run a scenario over a grid of one variable");
  sw->add_option("config", cfg_path, "Scenario file")->required();
  sw->add_option("--var", var_text, "distance, probe_power, linewidth or snr")
      ->check(CLI::IsMember({"distance", "probe_power", "linewidth", "snr"}));
  sw->add_option("--grid", grid_text, "Comma-separated values; 'off' disables the probe")->required();
  sw->add_option("--seed", seed, "Master seed (overrides the config)");
  sw->add_option("--out", out_dir, "Output directory (overrides the config)");
  sw->add_option("--threads", threads, "Worker threads, 0 = config value");
  sw->add_flag("--no-field-tier", no_field, "Skip the full-band field frame");
  sw->add_flag("--probe-pair", probe_pair, "distance only: paired probe off/on excess-noise estimates");
  sw->add_option("--probe-dbm", probe_dbm, "Probe power for --probe-pair");
  sw->add_option("--user", probe_user, "User (1-based) for --probe-pair");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*validate) {
      const auto cfg = cli::load_config(cfg_path);
      std::cout << cli::to_ini(cfg) << "\n# sha256 " << cli::config_hash(cfg) << "\n";
      return kExitOk;
    }

    cli::RunOptions opt;
    opt.threads = threads;
    opt.field_tier = !no_field;

    if (*run) {
      const auto cfg = load(cfg_path, seed, out_dir);
      const auto report = cli::run_scenario(cfg, cli::parse_mode(mode_text), opt);
      auto files = cli::write_run_artifacts(report, cfg, cfg.output_dir);
      if (debug) {
        const auto extra = cli::write_debug_artifacts(cfg, (std::filesystem::path(cfg.output_dir) / "debug").string());
        files.insert(files.end(), extra.begin(), extra.end());
      }
      if (report.mode != cli::Mode::kSensing) {
        for (const auto& u : report.users) {
          std::printf("user %zu  T %.4f  eps %.4f  g %.4f", u.user + 1, u.transmittance, u.excess_noise, u.correction);
          if (u.gaussian) std::printf("  gaussian %.3e bps", u.gaussian->bits_per_second);
          if (u.dm) std::printf("  dm %.3e bps", u.dm->bits_per_second);
          std::printf("  plob %.3e bps\n", u.plob.bits_per_second);
        }
      }
      if (report.sensing) {
        const auto& s = report.sensing->summary;
        std::printf("sensing %s  detected %zu/%zu  rms error %.1f m\n",
                    dsp::purpose_name(report.sensing->scenario.band).c_str(), s.detected, s.trials.size(),
                    s.rms_error_m);
      }
      for (const auto& f : files) std::printf("wrote %s\n", f.c_str());
      return kExitOk;
    }

    if (*sw) {
      const auto cfg = load(cfg_path, seed, out_dir);
      const auto var = cli::parse_sweep_var(var_text);
      const auto grid = parse_grid(grid_text);
      namespace fs = std::filesystem;
      fs::create_directories(cfg.output_dir);
      const fs::path dir(cfg.output_dir);

      if (probe_pair) {
        if (var != cli::SweepVar::kDistance) throw ConfigError("--probe-pair needs --var distance");
        if (probe_user == 0) throw ConfigError("--user is 1-based");
        const auto pairs = cli::probe_comparison(cfg, grid, probe_dbm, probe_user - 1);
        write_text(dir / "probe_pairs.csv", cli::probe_pairs_csv(pairs));
        for (const auto& p : pairs)
          std::printf("L %.1f km  eps off %.4g +- %.2g  on %.4g +- %.2g  delta %.3g  overlap %s\n", p.length_km,
                      p.eps_off, p.se_off, p.eps_on, p.se_on, p.difference(), p.overlapping() ? "yes" : "no");
        std::printf("wrote %s\n", (dir / "probe_pairs.csv").string().c_str());
        return kExitOk;
      }

      const auto res = cli::sweep(cfg, var, grid, opt);
      const auto name = "sweep_" + cli::sweep_var_name(var) + ".csv";
      write_text(dir / name, cli::sweep_csv(res));
      std::size_t ok = 0;
      for (std::size_t i = 0; i < res.points.size(); ++i) {
        const auto& p = res.points[i];
        if (p.ok) {
          ++ok;
          char sub[32];
          std::snprintf(sub, sizeof sub, "point_%03zu.json", i);
          write_text(dir / sub, cli::report_json(p.report));
          std::printf("%s = %g  ok\n", var_text.c_str(), p.value);
        } else {
          std::printf("%s = %g  failed: %s\n", var_text.c_str(), p.value, p.error.c_str());
        }
      }
      std::printf("wrote %s\n", (dir / name).string().c_str());
      return ok > 0 ? kExitOk : kExitRuntime;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
