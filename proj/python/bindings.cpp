#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "darts/harness.hpp"
#include "darts/serialize.hpp"

namespace py = pybind11;
using namespace darts;

namespace {

py::int_ to_py_int(const BigInt& value) {
  return py::reinterpret_steal<py::int_>(PyLong_FromString(value.str().c_str(), nullptr, 10));
}

SpaceQuery make_query(std::uint64_t intermediates, std::uint64_t ops, std::uint64_t k, std::uint64_t multiplicity) {
  SpaceQuery q;
  q.intermediates = intermediates;
  q.nonzero_ops = ops;
  q.k = k;
  q.multiplicity = multiplicity;
  q.validate();
  return q;
}

py::dict toy_bilevel(const std::string& mode, std::optional<double> xi, std::uint64_t steps,
                     std::optional<double> eta_w, std::optional<double> eta_alpha) {
  SearchConfig c = toy_search_config(mode_from_name(mode));
  if (xi) c.xi = *xi;
  if (eta_w) c.eta_w = *eta_w;
  if (eta_alpha) c.eta_alpha = *eta_alpha;
  c.iterations = steps;
  ToyBilevelTask task;
  const Trajectory t = search(c, task);
  py::list alpha, w;
  for (const auto& r : t.records) {
    alpha.append(r.alpha_values.at(0));
    w.append(r.weight_values.at(0));
  }
  py::dict out;
  out["alpha"] = t.final_alpha.at(0);
  out["w"] = t.final_weights.at(0);
  out["alpha_trajectory"] = alpha;
  out["w_trajectory"] = w;
  out["diverged"] = t.diverged;
  return out;
}

py::list genotype_to_py(const Genotype& g) {
  py::list nodes;
  for (const auto& node : g.nodes) {
    py::list edges;
    for (const auto& e : node) edges.append(py::make_tuple(e.pred, std::string(op_name(e.op))));
    nodes.append(edges);
  }
  return nodes;
}

py::list derive(const std::vector<std::vector<double>>& alpha, std::size_t intermediates, std::size_t k) {
  CellSpec spec;
  spec.intermediates = intermediates;
  spec.k = k;
  if (alpha.size() != spec.edge_count()) {
    throw std::invalid_argument("expected " + std::to_string(spec.edge_count()) + " alpha rows, got " +
                                std::to_string(alpha.size()));
  }
  std::vector<double> flat;
  for (const auto& row : alpha) {
    if (row.size() != kNumOps) throw std::invalid_argument("each alpha row needs one logit per op");
    flat.insert(flat.end(), row.begin(), row.end());
  }
  return genotype_to_py(derive_genotype(spec, AlphaParams(spec.edge_count(), std::move(flat))));
}

py::dict grad_check(std::uint64_t seed, std::size_t networks) {
  FidelityOptions o;
  o.seed = seed;
  o.networks = networks;
  const FidelityReport r = run_fidelity_suite(o);
  py::dict out;
  out["passed"] = r.passed;
  out["max_rel_err"] = r.max_error_eps_rule;
  out["max_rel_err_exact_hvp"] = r.max_error_exact_hvp;
  out["networks"] = r.cases.size();
  return out;
}

// Runs `darts search` on config text; returns (exit status, captured stdout + stderr).
py::tuple run_search(const std::string& config_text, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path cfg = std::filesystem::path(out_dir) / "config.cfg";
  write_text_file(cfg, config_text);
  std::ostringstream out, err;
  int status;
  {
    py::gil_scoped_release release;
    status = cmd_search(cfg, out_dir, out, err);
  }
  return py::make_tuple(status, out.str() + err.str());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Differentiable cell search: scalar bilevel demo, genotype derivation, space counts.";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::list ops;
  for (OpKind k : kOpRegistry) ops.append(std::string(op_name(k)));
  m.attr("OPS") = py::tuple(ops);

  m.def("toy_bilevel", &toy_bilevel, py::arg("mode") = "second-order", py::arg("xi") = py::none(),
        py::arg("steps") = 500, py::arg("eta_w") = py::none(), py::arg("eta_alpha") = py::none(),
        "Run the scalar bilevel problem from (alpha, w) = (2, -2).");
  m.def("derive_genotype", &derive, py::arg("alpha"), py::arg("intermediates"), py::arg("k") = 2,
        "Top-k genotype from per-edge op logits; returns [[(pred, op), ...] per node].");
  m.def(
      "count_discrete",
      [](std::uint64_t n, std::uint64_t p, std::uint64_t k, std::uint64_t mult) {
        return to_py_int(count_discrete(make_query(n, p, k, mult)));
      },
      py::arg("intermediates") = 4, py::arg("ops") = 7, py::arg("k") = 2, py::arg("multiplicity") = 1);
  m.def(
      "count_relaxed",
      [](std::uint64_t n, std::uint64_t p, std::uint64_t k, std::uint64_t mult) {
        return to_py_int(count_relaxed(make_query(n, p, k, mult)));
      },
      py::arg("intermediates") = 4, py::arg("ops") = 7, py::arg("k") = 2, py::arg("multiplicity") = 1);
  m.def("grad_check", &grad_check, py::arg("seed") = 0, py::arg("networks") = 20);
  m.def("parse_config", [](const std::string& text) { return config_to_text(parse_config(text)); },
        py::arg("text"), "Validate config text and return its canonical form.");
  m.def("config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("text"));
  m.def("run_search", &run_search, py::arg("config_text"), py::arg("out_dir"));
}
