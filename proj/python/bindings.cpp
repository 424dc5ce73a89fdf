// SPDX-License-Identifier: Apache-2.0
// Python bindings for the rate, filter and localization entry points.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dqan/channel.hpp"
#include "dqan/config.hpp"
#include "dqan/encoder.hpp"
#include "dqan/filternet.hpp"
#include "dqan/keyrate.hpp"
#include "dqan/pipeline.hpp"
#include "dqan/sensing.hpp"

namespace py = pybind11;
using namespace dqan;

namespace {

py::dict report_dict(const keyrate::KeyRateReport& r) {
  py::dict d;
  d["method"] = keyrate::method_name(r.method);
  d["bits_per_symbol"] = r.bits_per_symbol;
  d["bits_per_second"] = r.bits_per_second;
  d["clamped"] = r.clamped;
  d["infinite"] = r.infinite;
  d["iterations"] = r.iterations;
  d["gap"] = r.gap;
  d["objective"] = r.objective;
  d["lower_bound"] = r.lower_bound;
  d["objective_history"] = r.objective_history;
  return d;
}

struct RateInputs {
  keyrate::ChannelEstimate est;
  keyrate::KeyRateParams params;
  keyrate::CorrectionInputs corr;
};

RateInputs rate_inputs(double T, double eps, double va, double eta, double vel, double beta, double rate, double g1,
                       double s_lower, double s_upper, int cutoff) {
  RateInputs in;
  in.est.transmittance = T;
  in.est.excess_noise = eps;
  in.est.modulation_variance = va;
  in.params.efficiency = eta;
  in.params.electronic_noise = vel;
  in.params.beta = beta;
  in.params.rate_baud = rate;
  in.params.fock_cutoff = cutoff;
  in.corr = {g1, s_lower, s_upper};
  return in;
}

ComplexVec to_complex(const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& a) {
  const auto* p = a.data();
  return ComplexVec(p, p + a.size());
}

RealVec to_real(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  const auto* p = a.data();
  return RealVec(p, p + a.size());
}

}  // namespace

PYBIND11_MODULE(_dqan, m) {
  m.doc() = "Downstream quantum access network simulator";
  m.attr("__version__") = cli::version();

  static py::exception<Error> base(m, "DqanError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<SolverError>(m, "SolverError", base.ptr());
  py::register_exception<NoDetection>(m, "NoDetection", base.ptr());

  m.def("transmittance", [](double length_km, double loss_db_per_km) {
    channel::ChannelSpec s;
    s.length_km = length_km;
    s.loss_db_per_km = loss_db_per_km;
    s.validate();
    return s.transmittance();
  }, py::arg("length_km"), py::arg("loss_db_per_km") = 0.2);

  m.def("sideband_ratio", [](double suppression_db, double mean_depth) {
    return encoder::sideband_ratio(encoder::IqModulatorModel::from_suppression_db(suppression_db, mean_depth));
  }, py::arg("suppression_db"), py::arg("mean_depth") = 0.1);

  m.def("crosstalk_fractions", [](double linewidth_hz, double fsr_hz, double reflectivity, std::size_t user) {
    const auto plan = encoder::SidemodePlan::reference();
    const auto bank = filternet::make_bank(plan, linewidth_hz, fsr_hz, reflectivity);
    if (user >= bank.size()) throw InputError("user index out of range");
    const auto s = filternet::crosstalk_fractions(bank[user], plan, user);
    return py::make_tuple(s.lower, s.upper);
  }, py::arg("linewidth_hz") = 100e6, py::arg("fsr_hz") = 1.6e9, py::arg("reflectivity") = 0.227,
     py::arg("user") = 3, "(lower, upper) neighbour shares for one user of the reference plan");

  m.def("correction_factor", [](double g1, double s_lower, double s_upper) {
    return keyrate::correction_factor({g1, s_lower, s_upper});
  }, py::arg("g1"), py::arg("s_lower"), py::arg("s_upper"));

  m.def("plob_bound", &keyrate::plob_bound, py::arg("transmittance"));

  m.def("gaussian_keyrate",
        [](double T, double eps, double va, double eta, double vel, double beta, double rate, double g1, double sl,
           double su) {
          const auto in = rate_inputs(T, eps, va, eta, vel, beta, rate, g1, sl, su, 12);
          return report_dict(keyrate::gaussian_keyrate(in.est, in.params, in.corr));
        },
        py::arg("transmittance"), py::arg("excess_noise"), py::arg("modulation_variance") = 1.17,
        py::arg("efficiency") = 0.51, py::arg("electronic_noise") = 0.19, py::arg("beta") = 0.95,
        py::arg("rate_baud") = 50e6, py::arg("g1") = 1.0, py::arg("s_lower") = 0.0, py::arg("s_upper") = 0.0);

  m.def("dm_keyrate",
        [](double T, double eps, double va, double eta, double vel, double beta, double rate, double g1, double sl,
           double su, int cutoff) {
          const auto in = rate_inputs(T, eps, va, eta, vel, beta, rate, g1, sl, su, cutoff);
          keyrate::KeyRateReport r;
          {
            py::gil_scoped_release release;
            r = keyrate::dm_keyrate_sdp(in.est, in.params, in.corr);
          }
          return report_dict(r);
        },
        py::arg("transmittance"), py::arg("excess_noise"), py::arg("modulation_variance") = 1.17,
        py::arg("efficiency") = 0.51, py::arg("electronic_noise") = 0.19, py::arg("beta") = 0.95,
        py::arg("rate_baud") = 50e6, py::arg("g1") = 1.0, py::arg("s_lower") = 0.0, py::arg("s_upper") = 0.0,
        py::arg("fock_cutoff") = 12);

  m.def("simulate_symbols",
        [](py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> alpha, double T, double eps,
           double eta, double vel, std::uint64_t seed) {
          dsp::DetectorSpec det;
          det.efficiency = eta;
          det.electronic_noise = vel;
          const auto q = dsp::simulate_heterodyne_symbols(to_complex(alpha), T, eps, det, seed);
          return py::make_tuple(py::array_t<double>(q.x.size(), q.x.data()), py::array_t<double>(q.p.size(), q.p.data()));
        },
        py::arg("alpha"), py::arg("transmittance"), py::arg("excess_noise"), py::arg("efficiency") = 0.51,
        py::arg("electronic_noise") = 0.19, py::arg("seed") = 1, "SNU quadratures (x, p) for sent amplitudes");

  m.def("estimate_channel",
        [](py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> alpha,
           py::array_t<double, py::array::c_style | py::array::forcecast> x,
           py::array_t<double, py::array::c_style | py::array::forcecast> p, double eta, double vel) {
          dsp::QuadratureSamples q;
          q.x = to_real(x);
          q.p = to_real(p);
          keyrate::KeyRateParams kp;
          kp.efficiency = eta;
          kp.electronic_noise = vel;
          const auto e = keyrate::estimate_channel_params(to_complex(alpha), q, kp);
          py::dict d;
          d["transmittance"] = e.transmittance;
          d["excess_noise"] = e.excess_noise;
          d["modulation_variance"] = e.modulation_variance;
          d["excess_noise_clamped"] = e.excess_noise_clamped;
          return d;
        },
        py::arg("alpha"), py::arg("x"), py::arg("p"), py::arg("efficiency") = 0.51, py::arg("electronic_noise") = 0.19);

  m.def("locate", [](double delta_t, double length_km, double core_index) {
    sensing::CorrelationResult c;
    c.delta_t = delta_t;
    c.peak = 1.0;
    const auto r = sensing::locate(c, length_km, core_index);
    return py::make_tuple(r.estimate_km, r.clamped);
  }, py::arg("delta_t"), py::arg("length_km"), py::arg("core_index") = kDefaultCoreIndex,
     "(position_km, clamped) for a user-minus-server arrival difference");

  m.def("correlate_delay",
        [](py::array_t<double, py::array::c_style | py::array::forcecast> server,
           py::array_t<double, py::array::c_style | py::array::forcecast> user, double rate, int max_lag) {
          PhaseTrace s, u;
          s.samples = to_real(server);
          u.samples = to_real(user);
          s.sample_rate = u.sample_rate = rate;
          const auto c = sensing::correlate_delay(s, u, max_lag);
          return py::make_tuple(c.delta_t, c.peak);
        },
        py::arg("server"), py::arg("user"), py::arg("rate"), py::arg("max_lag"));

  m.def("validate_config", [](const std::string& path) {
    const auto c = cli::load_config(path);
    return py::make_tuple(cli::to_ini(c), cli::config_hash(c));
  }, py::arg("path"), "(canonical text, sha256) of a scenario file");

  m.def("run_report", [](const std::string& path, const std::string& mode, bool field_tier, std::int64_t seed) {
    auto c = cli::load_config(path);
    if (seed >= 0) c.seed = static_cast<std::uint64_t>(seed);
    cli::RunOptions opt;
    opt.field_tier = field_tier;
    std::string out;
    {
      py::gil_scoped_release release;
      out = cli::report_json(cli::run_scenario(c, cli::parse_mode(mode), opt));
    }
    return out;
  }, py::arg("path"), py::arg("mode") = "qkd", py::arg("field_tier") = false, py::arg("seed") = -1,
     "Run a scenario and return report.json text");
}
