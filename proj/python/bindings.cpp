#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "ceres_causal/backdoor.hpp"
#include "ceres_causal/error.hpp"
#include "ceres_causal/experiments.hpp"
#include "ceres_causal/fixtures.hpp"
#include "ceres_causal/frontdoor.hpp"
#include "ceres_causal/membank.hpp"
#include "ceres_causal/qp.hpp"
#include "ceres_causal/scm.hpp"

namespace py = pybind11;
using namespace ceres;

namespace {

using Rows = std::vector<std::vector<double>>;

Matrix to_matrix(const Rows& rows) {
  const std::size_t r = rows.size(), c = rows.empty() ? 0 : rows.front().size();
  std::vector<double> flat;
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionMismatch("ragged matrix");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(flat));
}

std::vector<double> to_list(const Distribution& d) { return {d.span().begin(), d.span().end()}; }

Assignment to_assignment(const std::map<std::string, std::size_t>& items) {
  Assignment a;
  for (const auto& [name, state] : items) a.set(parse_var(name), state);
  return a;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Causal adjustment, simplex QP and memory bank primitives";

  py::register_exception<Error>(m, "CeresError", PyExc_RuntimeError);
  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", PyExc_ValueError);
  py::register_exception<SpecError>(m, "SpecError", PyExc_ValueError);
  py::register_exception<InvalidProblem>(m, "InvalidProblem", PyExc_ValueError);
  py::register_exception<TimeOrderError>(m, "TimeOrderError", PyExc_ValueError);

  m.def("softmax", [](const std::vector<double>& s, double t) { return softmax(s, t).values(); },
        py::arg("scores"), py::arg("temperature") = 1.0);
  m.def("simplex_project", [](const std::vector<double>& v) { return simplex_project(v).values(); });

  py::class_<ScmSpec>(m, "Spec")
      .def_static("from_json", [](const std::string& text) { return spec_from_json(text); })
      .def_static("load", [](const std::filesystem::path& p) { return load_spec(p); })
      .def("to_json", [](const ScmSpec& s) { return spec_to_json(s); })
      .def("cardinality", [](const ScmSpec& s, const std::string& v) { return s.cardinality(parse_var(v)); })
      .def("with_corruption", [](const ScmSpec& s, double rho) { return with_corruption(s, rho); });

  m.def("fixture", [](const std::string& name) {
    if (name == "demo2") return fixtures::demo2();
    if (name == "demo4") return fixtures::demo4();
    if (name == "demo8") return fixtures::demo8();
    if (name == "no_confounder") return fixtures::no_confounder();
    throw InvalidInput("unknown fixture " + name);
  });

  m.def(
      "observational",
      [](const ScmSpec& s, const std::string& target, const std::map<std::string, std::size_t>& given) {
        return to_list(observational(s, parse_var(target), to_assignment(given)));
      },
      py::arg("spec"), py::arg("target"), py::arg("given") = std::map<std::string, std::size_t>{});
  m.def("intervene", [](const ScmSpec& s, const std::map<std::string, std::size_t>& action, const std::string& target) {
    return to_list(intervene(s, to_assignment(action), parse_var(target)));
  });
  m.def("backdoor_adjust", [](const Rows& y_given_z, const std::vector<double>& prior) {
    std::vector<Distribution> rows;
    for (const auto& r : y_given_z) rows.emplace_back(r);
    return to_list(backdoor_adjust(rows, Distribution(prior)));
  });
  m.def("frontdoor_adjust", [](const ScmSpec& s, std::size_t x) {
    const auto t = extract_frontdoor_tables(s);
    return to_list(frontdoor_adjust(t.y_given_mx, t.m_given_x, t.p_x, x));
  });

  m.def(
      "solve_simplex_qp",
      [](const Rows& g, const std::vector<double>& b, double tol) {
        QpOptions o;
        o.tol = tol;
        const auto s = solve_simplex_qp(QpProblem(to_matrix(g), Vector(b)), o);
        py::dict out;
        out["weights"] = s.weights.values();
        out["objective"] = s.objective;
        out["iterations"] = s.iterations;
        out["stationarity"] = s.kkt.stationarity;
        out["certificate_passed"] = s.certificate.passed();
        return out;
      },
      py::arg("G"), py::arg("b"), py::arg("tol") = 1e-10);
  m.def(
      "solve_entropic_qp",
      [](const Rows& g, const std::vector<double>& b, double tau, double tol) {
        return solve_entropic_qp(QpProblem(to_matrix(g), Vector(b)), tau, tol).weights.values();
      },
      py::arg("G"), py::arg("b"), py::arg("tau"), py::arg("tol") = 1e-12);

  py::class_<MemoryBank>(m, "MemoryBank")
      .def(py::init<std::size_t, double>(), py::arg("capacity") = MemoryBank::kDefaultCapacity,
           py::arg("kappa") = 1.0)
      .def("push", [](MemoryBank& b, const std::vector<double>& e, std::int64_t t) { b.push(Vector(e), t); })
      .def("context",
           [](const MemoryBank& b, const std::vector<double>& current) {
             const auto ctx = context(b, Vector(current));
             return py::make_tuple(ctx.value.values(), ctx.weights.values());
           })
      .def_property_readonly("times", &MemoryBank::times)
      .def("__len__", &MemoryBank::size);

  m.def(
      "run",
      [](const std::string& command, std::uint64_t seed, std::optional<std::size_t> trials) {
        ExperimentConfig c;
        c.command = command;
        c.seed = seed;
        c.trials = trials;
        c.jobs = 1;
        c.validate();
        const auto r = run_command(c);
        py::list out;
        for (const auto& v : r.verdicts) out.append(py::make_tuple(v.criterion, v.name, v.passed, v.detail));
        return out;
      },
      py::arg("command"), py::arg("seed") = 7, py::arg("trials") = std::nullopt);
}
