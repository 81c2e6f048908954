#include <sstream>
#include <string>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rdsos/config.hpp"
#include "rdsos/moment_io.hpp"
#include "rdsos/oracle.hpp"
#include "rdsos/pipeline.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace rdsos;

namespace {

// JSON crosses the boundary as text; configs and reports are small.
py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }
json from_py(const py::handle& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

RunConfig resolved(const py::object& config) {
  RunConfig c = py::isinstance<py::str>(config) ? load_config(config.cast<std::string>()) : config_from_json(from_py(config));
  validate_config(c);
  return c;
}

py::dict moments_dict(const MomentSequence& m) {
  py::dict d;
  for (const auto& [a, v] : m.entries()) d[py::make_tuple(a.time(), a.spatial_key())] = v;
  return d;
}

std::string moments_csv(const MomentSequence& m) {
  std::ostringstream os;
  write_moments_csv(m, os);
  return os.str();
}

MomentSequence moments_from_csv(const std::string& s) {
  std::istringstream is(s);
  return read_moments_csv(is);
}

py::tuple solved(const Solution& s) {
  return py::make_tuple(s.occupation, s.terminal, to_py(s.report.to_json()));
}

}  // namespace

PYBIND11_MODULE(_rdsos, m) {
  m.doc() = "Moment relaxations of y_t = y_xx + eps y (1 - y) on the periodic unit interval";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<MomentSequence>(m, "Moments")
      .def_property_readonly("max_degree", [](const MomentSequence& s) { return s.caps().max_degree; })
      .def_property_readonly("max_harmonic", [](const MomentSequence& s) { return s.caps().max_harmonic; })
      .def_property_readonly("cutoff", [](const MomentSequence& s) { return s.caps().cutoff; })
      .def_property_readonly("time", [](const MomentSequence& s) { return s.caps().time; })
      .def("__len__", &MomentSequence::size)
      .def("__getitem__",
           [](const MomentSequence& s, std::pair<int, std::string> key) {
             const auto a = MultiIndex::from_key(key.first, key.second);
             if (!s.contains(a)) throw py::key_error(a.to_string());
             return s.at(a);
           })
      .def("to_dict", &moments_dict, "{(time exponent, spatial key): value}")
      .def("to_csv", &moments_csv)
      .def_static("from_csv", &moments_from_csv)
      .def("__repr__", [](const MomentSequence& s) {
        return "<Moments degree=" + std::to_string(s.caps().max_degree) + " K=" + std::to_string(s.caps().cutoff) +
               " n=" + std::to_string(s.size()) + ">";
      });

  m.def("load_config", [](const std::string& path) { return to_py(config_to_json(load_config(path))); },
        py::arg("path"), "Reads a config file and returns it with every default filled in.");
  m.def("validate_config", [](const py::object& config) { resolved(config); }, py::arg("config"),
        "Raises ConfigError on an invalid config (dict or path).");

  m.def(
      "run",
      [](const std::string& command, const py::object& config) {
        const auto c = resolved(config);
        CommandResult (*cmd)(const RunConfig&) = nullptr;
        if (command == "simulate") cmd = cmd_simulate;
        else if (command == "moments") cmd = cmd_moments;
        else if (command == "assemble") cmd = cmd_assemble;
        else if (command == "solve") cmd = cmd_solve;
        else if (command == "compare") cmd = [](const RunConfig& rc) { return cmd_compare(rc); };
        else if (command == "validate") cmd = cmd_validate;
        else if (command == "report") cmd = cmd_report;
        else throw std::invalid_argument("unknown command '" + command + "'");
        CommandResult r;
        {
          py::gil_scoped_release nogil;
          r = cmd(c);
        }
        return py::make_tuple(r.exit_code, to_py(r.summary));
      },
      py::arg("command"), py::arg("config"), "Runs one pipeline stage; returns (exit code, summary).");

  m.def(
      "fd_solve",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> y0, double eps, double dt, double horizon) {
        std::vector<double> v(y0.data(), y0.data() + y0.size());
        const auto traj = fd_solve(GridFunction(std::move(v)), eps, dt, horizon);
        py::array_t<double> states({traj.states.size(), traj.states.front().size()});
        auto s = states.mutable_unchecked<2>();
        for (std::size_t q = 0; q < traj.states.size(); ++q) {
          for (std::size_t i = 0; i < traj.states[q].size(); ++i) s(q, i) = traj.states[q][i];
        }
        py::array_t<double> times = py::cast(traj.times);
        return py::make_tuple(times, states);
      },
      py::arg("y0"), py::arg("eps"), py::arg("dt") = 1e-3, py::arg("horizon") = 1.0,
      "Finite-difference trajectory; returns (times, states[snapshot, grid point]).");

  m.def(
      "pushforward_moments",
      [](const py::object& config) {
        const auto c = resolved(config);
        const auto& p = c.problem;
        const int d = c.compare_degree();
        py::gil_scoped_release nogil;
        const auto em = pushforward_moments(c.initial_spec(), {d, p.harmonic, p.cutoff, true},
                                            {d, p.harmonic, p.cutoff, false}, p.eps, c.oracle);
        return std::make_pair(em.occ, em.term);
      },
      py::arg("config"), "Empirical (occupation, terminal) moments up to the comparison degree.");

  m.def(
      "solve",
      [](const py::object& config) {
        const auto c = resolved(config);
        const auto& p = c.problem;
        const auto spec = c.initial_spec();
        Solution s;
        {
          py::gil_scoped_release nogil;
          const auto init = initial_moments(spec, {2 * moment_order(p.order), p.harmonic, p.cutoff, false});
          const double r2 = p.radius ? *p.radius * *p.radius : default_radius_squared(spec, p.cutoff);
          s = solve(build_relaxation(p, init, r2), c.solver, &init);
        }
        return solved(s);
      },
      py::arg("config"), "Solves the relaxation; returns (occupation, terminal, report).");

  m.def(
      "export_sdpa",
      [](const py::object& config, const std::string& path) {
        const auto c = resolved(config);
        export_sdpa(build_relaxation(c.problem, c.initial_spec()), path);
      },
      py::arg("config"), py::arg("path"));

  m.def(
      "logistic_moments",
      [](double y0, double eps, int degree) {
        return logistic_moments(y0, eps, {degree, 0, 0, true}, {degree, 0, 0, false});
      },
      py::arg("y0"), py::arg("eps"), py::arg("degree"), "Exact (occupation, terminal) moments from a constant state.");

  m.def(
      "compare_moments",
      [](const MomentSequence& computed, const MomentSequence& reference, double rel_tol, double floor) {
        return to_py(compare_moments(computed, reference, rel_tol, floor).to_json());
      },
      py::arg("computed"), py::arg("reference"), py::arg("rel_tol"), py::arg("floor") = 1e-9);
}
