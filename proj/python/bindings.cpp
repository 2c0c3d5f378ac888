#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>

#include "foldcont/errors.hpp"
#include "foldcont/oracles.hpp"
#include "foldcont/runs.hpp"

namespace py = pybind11;
using namespace foldcont;

namespace {

using Overrides = std::map<std::string, std::string>;

RunConfig make_config(const std::string& text, const Overrides& overrides) {
  RunConfig c = parse_run_config(text);
  for (const auto& [k, v] : overrides) c.set(k, v);
  c.validate();
  return c;
}

std::string trace(const std::string& text, const Overrides& overrides) {
  const RunConfig c = make_config(text, overrides);
  const MappedProblem mp = build_problem(c);
  const Branch br = trace_continuum(mp.problem, continuation_config(c));
  Json points = Json::array(), events = Json::array(), folds = Json::array();
  for (const BranchPoint& p : br.points) points.push_back(to_json(p, false));
  for (const BranchEvent& e : br.events) events.push_back(to_json(e));
  for (const FoldRecord& f : br.folds) folds.push_back(to_json(f, true));
  return dump_json(Json{{"points", points},
                        {"events", events},
                        {"folds", folds},
                        {"last_point", to_json(br.points.back(), true)}},
                   -1);
}

std::string shape_check(const std::string& text, const Overrides& overrides) {
  const RunConfig c = make_config(text, overrides);
  return dump_json(run_shape_check(c, continuation_config(c)).json, -1);
}

std::string experiment(const std::string& text, const Overrides& overrides) {
  return dump_json(to_json(run_experiment(make_config(text, overrides))), -1);
}

std::string oracle(const std::string& text, const Overrides& overrides) {
  return dump_json(run_oracle(make_config(text, overrides)).json, -1);
}

std::string spectrum(const std::string& text, const Overrides& overrides) {
  const RunConfig c = make_config(text, overrides);
  const Spectrum sp = run_spectrum(c, continuation_config(c));
  Json sigma = Json::array();
  for (const EigenPair& e : sp.pairs) sigma.push_back(e.sigma);
  return dump_json(Json{{"mu", sp.mu}, {"morse_index", sp.morse_index}, {"sigma", sigma}}, -1);
}

std::vector<Vector> multistart(int n_interior, double mu, int n_starts, std::uint64_t seed, int jobs) {
  const Problem p =
      make_problem(ReferenceDomain::interval(n_interior), Diffeomorphism::identity(1), Nonlinearity::exponential());
  MultistartOptions o;
  o.n_starts = n_starts;
  o.seed = seed;
  o.jobs = jobs;
  return multistart_enumerate(p, mu, o);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Fold continuation for semilinear Dirichlet problems on mapped domains";

  auto base = py::register_exception<Error>(m, "FoldcontError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<DegenerateMapError>(m, "DegenerateMapError", base.ptr());
  py::register_exception<BracketError>(m, "BracketError", base.ptr());
  py::register_exception<BlowupError>(m, "BlowupError", base.ptr());

  m.def("default_config", [] { return to_text(RunConfig{}); });
  m.def("config_keys", &RunConfig::keys);
  m.def("resolve_config", [](const std::string& text, const Overrides& o) { return to_text(make_config(text, o)); },
        py::arg("text") = "", py::arg("overrides") = Overrides{});

  const auto release = py::call_guard<py::gil_scoped_release>();
  m.def("trace", &trace, py::arg("text") = "", py::arg("overrides") = Overrides{}, release);
  m.def("shape_check", &shape_check, py::arg("text") = "", py::arg("overrides") = Overrides{}, release);
  m.def("experiment", &experiment, py::arg("text") = "", py::arg("overrides") = Overrides{}, release);
  m.def("oracle", &oracle, py::arg("text") = "", py::arg("overrides") = Overrides{}, release);
  m.def("spectrum", &spectrum, py::arg("text") = "", py::arg("overrides") = Overrides{}, release);

  m.def(
      "radial_family",
      [](double b) {
        const RadialFamilyPoint rf = radial_family(b);
        return py::make_tuple(rf.mu, rf.sup);
      },
      py::arg("b"));
  m.def(
      "shooting_roots", [](double mu) { return shooting_roots(Nonlinearity::exponential(), mu); }, py::arg("mu"),
      release);
  m.def(
      "shooting_fold", [](double tol) { return shooting_fold(Nonlinearity::exponential(), 0.5, 6.0, tol); },
      py::arg("tol") = 1e-9, release);
  m.def("multistart", &multistart, py::arg("n_interior"), py::arg("mu"), py::arg("n_starts") = 500,
        py::arg("seed") = 0, py::arg("jobs") = 1, release);
}
