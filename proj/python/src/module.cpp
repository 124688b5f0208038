// Python bindings. Graphs cross as opaque handles, reports as JSON text that
// the package decodes.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "scg/acceptance.hpp"
#include "scg/analysis.hpp"
#include "scg/error.hpp"
#include "scg/experiment.hpp"
#include "scg/fixtures.hpp"
#include "scg/graph_io.hpp"
#include "scg/oracle.hpp"

namespace py = pybind11;
using namespace scg;

namespace {

struct PyGraph {
  std::shared_ptr<const Graph> g;
  std::map<std::string, double> canonical;
};

PyGraph fixture_graph(const std::string& name) {
  const Fixture& f = fixture(name);
  return {std::make_shared<Graph>(f.graph), f.canonical};
}

NodeSet names_to_set(const Graph& g, const std::vector<std::string>& names) {
  for (const std::string& n : names)
    if (!g.has(n)) throw Error(Errc::UnknownNode, "unknown node '" + n + "'");
  return g.set(names);
}

NodeId node_id(const Graph& g, const std::string& n) {
  if (!g.has(n)) throw Error(Errc::UnknownNode, "unknown node '" + n + "'");
  return g.id(n);
}

Inputs inputs_of(const PyGraph& pg, const std::optional<std::map<std::string, double>>& in) {
  return make_inputs(*pg.g, in ? *in : pg.canonical);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  static py::handle scg_error = py::exception<Error>(m, "ScgError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(scg_error)(py::str(e.what()));
      exc.attr("code") = errc_name(e.code());
      PyErr_SetObject(scg_error.ptr(), exc.ptr());
    }
  });

  py::class_<PyGraph>(m, "Graph")
      .def_property_readonly("nodes", [](const PyGraph& pg) { return pg.g->names(pg.g->order()); })
      .def_property_readonly("inputs", [](const PyGraph& pg) { return pg.g->names(pg.g->inputs()); })
      .def_property_readonly("canonical_inputs", [](const PyGraph& pg) { return pg.canonical; })
      .def("to_json", [](const PyGraph& pg) { return graph_to_json(*pg.g).dump(); })
      .def("__len__", [](const PyGraph& pg) { return pg.g->size(); });

  m.def("fixture_names", [] {
    std::vector<std::string> out;
    for (const Fixture& f : fixtures()) out.push_back(f.name);
    return out;
  });
  m.def("fixture", &fixture_graph, py::arg("name"));
  m.def("graph_from_json", [](const std::string& text) {
    return PyGraph{std::make_shared<Graph>(graph_from_json(parse_json_text(text, "<string>"))), {}};
  });
  m.def("load_graph", [](const std::string& path) { return PyGraph{std::make_shared<Graph>(load_graph(path)), {}}; });

  m.def(
      "analyze_node",
      [](const PyGraph& pg, const std::string& node, std::optional<std::vector<std::string>> critic,
         std::optional<std::vector<std::string>> baseline, std::optional<std::vector<std::string>> separator) {
        const Graph& g = *pg.g;
        NodeQuery q;
        if (critic) q.critic = names_to_set(g, *critic);
        if (baseline) q.baseline = names_to_set(g, *baseline);
        if (separator) {
          std::vector<NodeId> s;
          for (const std::string& n : *separator) s.push_back(node_id(g, n));
          q.separator = s;
        }
        return analyze_node(g, node_id(g, node), q).dump();
      },
      py::arg("graph"), py::arg("node"), py::arg("critic") = py::none(), py::arg("baseline") = py::none(),
      py::arg("separator") = py::none());

  m.def("d_separated", [](const PyGraph& pg, const std::vector<std::string>& A, const std::vector<std::string>& B,
                          const std::vector<std::string>& Z) {
    const Graph& g = *pg.g;
    return d_separated(g, names_to_set(g, A), names_to_set(g, B), names_to_set(g, Z));
  });
  m.def("is_valid_critic_set", [](const PyGraph& pg, const std::string& v, const std::vector<std::string>& C) {
    return is_valid_critic_set(*pg.g, node_id(*pg.g, v), names_to_set(*pg.g, C));
  });
  m.def("is_valid_baseline_set", [](const PyGraph& pg, const std::string& v, const std::vector<std::string>& B) {
    return is_valid_baseline_set(*pg.g, node_id(*pg.g, v), names_to_set(*pg.g, B));
  });
  m.def("separator_verdict", [](const PyGraph& pg, const std::string& u, const std::vector<std::string>& S) {
    std::vector<NodeId> s;
    for (const std::string& n : S) s.push_back(node_id(*pg.g, n));
    return std::string(verdict_name(separator_verdict(*pg.g, node_id(*pg.g, u), s).kind));
  });

  m.def(
      "exact_gradient",
      [](const PyGraph& pg, std::optional<std::map<std::string, double>> inputs) {
        const Graph& g = *pg.g;
        const ExactGradient eg = exact_parameter_gradient(g, inputs_of(pg, inputs));
        std::map<std::string, double> out;
        for (NodeId p : g.inputs()) out[g.name(p)] = eg.grad[static_cast<size_t>(p)];
        return py::make_tuple(eg.J, out);
      },
      py::arg("graph"), py::arg("inputs") = py::none());

  m.def("run_experiment", [](const std::string& config_text) {
    const ExperimentConfig cfg = parse_config(parse_json_text(config_text, "<config>"), "<config>");
    py::gil_scoped_release release;
    return results_csv(run_experiment(cfg));
  });
  m.def("builtin_menu_names", [] {
    std::vector<std::string> out;
    for (const auto& [name, text] : builtin_menus()) out.push_back(name);
    return out;
  });
  m.def("builtin_menu", [](const std::string& name) {
    builtin_menu(name);  // ConfigError for unknown names
    return builtin_menus().at(name);
  });

  m.def("criteria", [] {
    std::vector<std::pair<std::string, std::string>> out;
    for (const Criterion& c : scg::criteria()) out.emplace_back(c.id, c.title);
    return out;
  });
  m.def(
      "verify",
      [](const std::vector<std::string>& only) {
        std::ostringstream os;
        int failures = 0;
        {
          py::gil_scoped_release release;
          failures = run_acceptance(os, only);
        }
        return py::make_tuple(failures, os.str());
      },
      py::arg("only") = std::vector<std::string>{});
}
