#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "aria/compiler.hpp"
#include "aria/config.hpp"
#include "aria/core/graph.hpp"
#include "aria/errors.hpp"
#include "aria/eval.hpp"
#include "aria/scorer.hpp"
#include "aria/session.hpp"

namespace py = pybind11;
using namespace aria;

namespace {

MatchLabel label_from(const std::string& text) {
  auto l = parse_match_label(text);
  if (!l) throw py::value_error("unknown match label '" + text + "'");
  return *l;
}

std::vector<MatchLabel> labels_from(const std::vector<std::string>& texts) {
  std::vector<MatchLabel> out;
  for (const auto& t : texts) out.push_back(label_from(t));
  return out;
}

// Thin Python view of the graph: nodes are addressed by name.
class PyGraph {
 public:
  explicit PyGraph(const std::string& root) : g_(Concept::make(root)) {}

  std::string add(const std::string& name, const std::optional<std::string>& parent) {
    std::optional<NodeId> p;
    if (parent) p = id_of(*parent);
    return g_.node(g_.add_node(Concept::make(name), p)).subject.name;
  }
  std::vector<std::string> order() const { return names(g_.topological_order()); }
  std::vector<std::string> dependencies(const std::string& name) const {
    auto s = g_.dependencies(id_of(name));
    return names({s.begin(), s.end()});
  }
  int depth(const std::string& name) const { return g_.node(id_of(name)).depth; }
  std::size_t size() const { return g_.size(); }
  std::string to_json() const { return g_.to_json().dump(); }

 private:
  NodeId id_of(const std::string& name) const {
    auto id = g_.find(canonicalize(name));
    if (!id) throw py::key_error(name);
    return *id;
  }
  std::vector<std::string> names(const std::vector<NodeId>& ids) const {
    std::vector<std::string> out;
    for (auto id : ids) out.push_back(g_.node(id).subject.name);
    return out;
  }
  DependencyGraph g_;
};

}  // namespace

PYBIND11_MODULE(_aria, m) {
  m.doc() = "Bindings for the aria formalization pipeline";

  py::register_exception<Error>(m, "AriaError");
  py::register_exception<CycleError>(m, "CycleError", m.attr("AriaError"));
  py::register_exception<ConfigError>(m, "ConfigError", m.attr("AriaError"));

  m.def("canonicalize", [](const std::string& s) { return canonicalize(s); });

  m.def("aggregate", [](const std::vector<std::string>& labels, double lam) { return aggregate(labels_from(labels), lam); },
        py::arg("labels"), py::arg("lam") = 0.8);
  m.def("decide", &decide, py::arg("score"), py::arg("alpha"));

  m.def(
      "metrics",
      [](std::size_t tp, std::size_t tn, std::size_t fp, std::size_t fn) {
        auto r = metrics({tp, tn, fp, fn});
        return py::dict(py::arg("accuracy") = r.accuracy, py::arg("precision") = r.precision,
                        py::arg("recall") = r.recall, py::arg("f1") = r.f1);
      },
      py::arg("tp"), py::arg("tn"), py::arg("fp"), py::arg("fn"));
  m.def("percent", &percent);
  m.def("pass_at_k", &pass_at_k, py::arg("outcomes"), py::arg("k"));

  m.def("parse_diagnostics", [](const std::string& raw) {
    py::list out;
    for (const auto& d : parse_diagnostics(raw))
      out.append(py::dict(py::arg("severity") = std::string(to_string(d.severity)), py::arg("line") = d.line,
                          py::arg("column") = d.column, py::arg("message") = d.message));
    return out;
  });

  m.def("parse_subtasks", [](const std::string& reply) -> py::object {
    auto s = parse_subtasks(reply);
    if (!s) return py::none();
    return py::dict(py::arg("conditions") = s->conditions, py::arg("conclusions") = s->conclusions);
  });

  m.def("load_config", [](const std::string& path) { return to_json(load_config(path)).dump(); });

  // Runs a CLI command in-process; returns the exit code.
  m.def(
      "formalize",
      [](const std::string& input, const std::string& config, const std::string& out, bool score) {
        auto cfg = load_config(config);
        cfg.out_dir = out;
        cfg.cache_dir = (std::filesystem::path(out) / "cache").string();
        FormalizeArgs args;
        args.input = input;
        args.score = score;
        return cmd_formalize(args, cfg);
      },
      py::arg("input"), py::arg("config"), py::arg("out"), py::arg("score") = false);
  m.def(
      "replay", [](const std::string& transcript) { return cmd_replay(ReplayArgs{transcript, std::nullopt}); },
      py::arg("transcript"));

  py::class_<PyGraph>(m, "Graph")
      .def(py::init<const std::string&>(), py::arg("root"))
      .def("add", &PyGraph::add, py::arg("name"), py::arg("parent") = py::none())
      .def("topological_order", &PyGraph::order)
      .def("dependencies", &PyGraph::dependencies)
      .def("depth", &PyGraph::depth)
      .def("__len__", &PyGraph::size)
      .def("to_json", &PyGraph::to_json);
}
