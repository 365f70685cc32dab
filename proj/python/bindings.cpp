#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "robustspin/calibration.hpp"
#include "robustspin/dd.hpp"
#include "robustspin/errors.hpp"
#include "robustspin/family.hpp"
#include "robustspin/landscape.hpp"
#include "robustspin/noise.hpp"
#include "robustspin/rb.hpp"
#include "robustspin/readout.hpp"
#include "robustspin/roc.hpp"
#include "robustspin/units.hpp"

namespace py = pybind11;
using namespace robustspin;

namespace {

PulseFamily family_by_name(const std::string& name, double omega, double dt, const Waveform* pi,
                           const Waveform* half_pi) {
  if (name == "square") return PulseFamily::square(omega, dt);
  if (name == "corpse") return PulseFamily::corpse(omega, dt);
  if (name == "bb1") return PulseFamily::bb1(omega, dt);
  if (name == "ideal") return PulseFamily::instantaneous();
  if (name == "custom") {
    return PulseFamily::from_waveforms("custom", pi ? std::make_shared<Waveform>(*pi) : nullptr,
                                       half_pi ? std::make_shared<Waveform>(*half_pi) : nullptr);
  }
  throw InvalidArgument("unknown pulse family '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Noise-robust control pulses for a driven two-level spin";
  m.attr("__version__") = "0.1.0";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  // InvalidArgument derives from std::invalid_argument, which maps to ValueError

  m.def("mhz", &units::mhz, "Frequency in MHz to angular frequency in rad/s");
  m.def("khz", &units::khz);

  py::class_<Waveform>(m, "Waveform")
      .def(py::init<>())
      .def_readwrite("dt", &Waveform::dt)
      .def_readwrite("ux", &Waveform::ux)
      .def_readwrite("uy", &Waveform::uy)
      .def_readwrite("omega_max", &Waveform::omega_max)
      .def("__len__", &Waveform::size)
      .def_property_readonly("duration", &Waveform::duration)
      .def("validate", &Waveform::validate);

  py::class_<ErrorPoint>(m, "ErrorPoint")
      .def(py::init([](double d0, double d1, double dphi) { return ErrorPoint{d0, d1, dphi}; }),
           py::arg("delta0") = 0.0, py::arg("delta1") = 0.0, py::arg("delta_phi") = 0.0)
      .def_readwrite("delta0", &ErrorPoint::delta0)
      .def_readwrite("delta1", &ErrorPoint::delta1)
      .def_readwrite("delta_phi", &ErrorPoint::delta_phi);

  m.def("square_pulse", &square_pulse, py::arg("theta"), py::arg("phi"), py::arg("omega"),
        py::arg("dt") = kDefaultDt);
  m.def("corpse", &corpse, py::arg("theta"), py::arg("omega"), py::arg("dt") = kDefaultDt);
  m.def("bb1", &bb1, py::arg("theta"), py::arg("omega"), py::arg("dt") = kDefaultDt);
  m.def("load_waveform", &load_waveform);
  m.def("save_waveform", &save_waveform);
  m.def("ideal_rotation", &ideal_rotation);
  m.def(
      "waveform_propagator",
      [](const Waveform& w, const ErrorPoint& e, double phase) { return Eigen::Matrix2cd(waveform_propagator(w, e, phase)); },
      py::arg("waveform"), py::arg("err") = ErrorPoint{}, py::arg("phase") = 0.0);
  m.def("transfer_fidelity", &transfer_fidelity, py::arg("waveform"), py::arg("err") = ErrorPoint{});

  m.def(
      "scan",
      [](const Waveform& w, double detuning_range, double rabi_range, std::size_t n, const std::string& label) {
        ScanOptions o;
        o.detuning_range = detuning_range;
        o.rabi_range = rabi_range;
        o.n = n;
        const auto map = scan(w, o, label);
        py::dict d;
        d["detuning_axis"] = map.detuning_axis;
        d["rabi_axis"] = map.rabi_axis;
        d["values"] = map.values;
        d["label"] = map.pulse_label;
        return d;
      },
      py::arg("waveform"), py::arg("detuning_range") = 0.3, py::arg("rabi_range") = 0.3, py::arg("n") = 61,
      py::arg("label") = "pulse");
  m.def("detuning_cut", &detuning_cut, py::arg("waveform"), py::arg("range") = 1.0, py::arg("n") = 201);

  m.def("fid_probability", &fid_probability);
  m.def("rabi_decay_envelope", &rabi_decay_envelope);
  m.def("t2star_from_sigma", &t2star_from_sigma);
  m.def("gamma_from_t2prime", &gamma_from_t2prime);

  py::enum_<SearchDirection>(m, "SearchDirection")
      .value("Gradient", SearchDirection::Gradient)
      .value("Lbfgs", SearchDirection::Lbfgs);

  py::class_<RocConfig>(m, "RocConfig")
      .def(py::init<>())
      .def_readwrite("target", &RocConfig::target)
      .def_readwrite("slices", &RocConfig::slices)
      .def_readwrite("dt", &RocConfig::dt)
      .def_readwrite("omega_max", &RocConfig::omega_max)
      .def_readwrite("epsilon1", &RocConfig::epsilon1)
      .def_readwrite("epsilon2", &RocConfig::epsilon2)
      .def_readwrite("m_max", &RocConfig::m_max)
      .def_readwrite("mu1", &RocConfig::mu1)
      .def_readwrite("mu2", &RocConfig::mu2)
      .def_readwrite("max_iters", &RocConfig::max_iters)
      .def_readwrite("fitness_goal", &RocConfig::fitness_goal)
      .def_readwrite("stall_window", &RocConfig::stall_window)
      .def_readwrite("smooth_weight", &RocConfig::smooth_weight)
      .def_readwrite("clamp_ends", &RocConfig::clamp_ends)
      .def_readwrite("init_amplitude", &RocConfig::init_amplitude)
      .def_readwrite("seed", &RocConfig::seed)
      .def_readwrite("direction", &RocConfig::direction);

  py::class_<RocResult>(m, "RocResult")
      .def_readonly("waveform", &RocResult::waveform)
      .def_readonly("fitness_trace", &RocResult::fitness_trace)
      .def_readonly("final_fitness", &RocResult::final_fitness)
      .def_readonly("converged", &RocResult::converged)
      .def_readonly("iterations", &RocResult::iterations);

  m.def("fitness", &fitness);
  m.def("fitness_gradient", [](const Waveform& w, const RocConfig& cfg) {
    const auto g = fitness_gradient(w, cfg);
    return py::make_tuple(g.fitness, g.gx, g.gy);
  });
  m.def(
      "optimize", [](const RocConfig& cfg, std::optional<Waveform> init) { return optimize(cfg, init); },
      py::arg("config"), py::arg("initial") = std::nullopt, py::call_guard<py::gil_scoped_release>());

  m.def(
      "randomized_benchmarking",
      [](const std::string& family, std::vector<int> lengths, int n_gate_sets, int n_paulis, std::uint64_t seed,
         const ErrorPoint& err, double omega, double dt, const Waveform* pi, const Waveform* half_pi) {
        RbSuiteOptions so;
        so.lengths = std::move(lengths);
        so.n_gate_sets = n_gate_sets;
        so.n_paulis = n_paulis;
        so.seed = seed;
        const auto fam = family_by_name(family, omega, dt, pi, half_pi);
        const auto curve = simulate_rb(generate_rb_suite(so), fam, err);
        const auto fit = fit_rb(curve);
        py::dict d;
        d["lengths"] = curve.lengths;
        d["mean_fidelities"] = curve.mean_fidelities;
        d["std_errors"] = curve.std_errors;
        d["fa"] = fit.fa;
        d["fa_err"] = fit.fa_err;
        d["d_if"] = fit.dif;
        d["identifiable"] = fit.identifiable;
        return d;
      },
      py::arg("family") = "square", py::arg("lengths") = RbSuiteOptions{}.lengths, py::arg("n_gate_sets") = 10,
      py::arg("n_paulis") = 4, py::arg("seed") = 1, py::arg("err") = ErrorPoint{},
      py::arg("omega") = units::mhz(10.0), py::arg("dt") = kDefaultDt, py::arg("pi") = nullptr,
      py::arg("half_pi") = nullptr);
  m.def(
      "fit_rb",
      [](const std::vector<int>& lengths, const std::vector<double>& f) {
        const auto r = fit_rb(lengths, f);
        return py::dict(py::arg("fa") = r.fa, py::arg("fa_err") = r.fa_err, py::arg("d_if") = r.dif,
                        py::arg("d_if_err") = r.dif_err, py::arg("identifiable") = r.identifiable);
      },
      py::arg("lengths"), py::arg("fidelities"));

  m.def(
      "dd_spectrum",
      [](const std::vector<std::pair<double, double>>& spins, const std::string& sequence, int repeats,
         const std::string& family, const ErrorPoint& err, double f_lo, double f_hi, std::size_t points,
         double b0_gauss, double omega, double dt, const Waveform* pi) {
        SensingConfig cfg;
        cfg.b0_gauss = b0_gauss;
        for (const auto& [a_par, a_perp] : spins) cfg.spins.push_back(NuclearSpin::from_components(a_par, a_perp));
        if (sequence == "xy4") cfg.kind = DdKind::XY4;
        else if (sequence == "xy8") cfg.kind = DdKind::XY8;
        else throw InvalidArgument("sequence must be 'xy4' or 'xy8'");
        cfg.repeats = repeats;
        cfg.family = family_by_name(family, omega, dt, pi, nullptr);
        if (!cfg.family.has_half_pi()) cfg.family.half_pi = PulseFamily::square(omega, dt).half_pi;
        cfg.err = err;
        cfg.tau_axis = tau_axis_for_frequencies(f_lo, f_hi, points);
        Spectrum spec;
        {
          py::gil_scoped_release nogil;
          spec = simulate_spectrum(cfg);
        }
        py::dict d;
        d["tau"] = spec.tau;
        d["frequency"] = spec.frequency;
        d["population"] = spec.population;
        return d;
      },
      py::arg("spins"), py::arg("sequence") = "xy4", py::arg("repeats") = 40, py::arg("family") = "square",
      py::arg("err") = ErrorPoint{}, py::arg("f_lo") = 0.4e6, py::arg("f_hi") = 1.6e6, py::arg("points") = 721,
      py::arg("b0_gauss") = 510.0, py::arg("omega") = units::mhz(10.0), py::arg("dt") = kDefaultDt,
      py::arg("pi") = nullptr);
  m.def(
      "detect_peaks",
      [](const std::vector<double>& frequency, const std::vector<double>& population, double prominence) {
        Spectrum s;
        s.frequency = frequency;
        s.population = population;
        std::vector<std::pair<double, double>> out;
        for (const auto& p : detect_peaks(s, prominence)) out.emplace_back(p.frequency, p.depth);
        return out;
      },
      py::arg("frequency"), py::arg("population"), py::arg("prominence"));

  m.def(
      "contrast",
      [](double i_sig, double i_ref, double di_sig, double di_ref) {
        const auto c = contrast(ContrastRecord{i_sig, i_ref, di_sig, di_ref, 1});
        return py::make_tuple(c.c, c.dc);
      },
      py::arg("i_sig"), py::arg("i_ref"), py::arg("di_sig") = 0.0, py::arg("di_ref") = 0.0);
  m.def(
      "normalize_population",
      [](double c, double c_min, double c_max) {
        const auto p = normalize_population(c, c_min, c_max);
        return py::make_tuple(p.value, p.out_of_range);
      },
      py::arg("c"), py::arg("c_min"), py::arg("c_max"));
}
