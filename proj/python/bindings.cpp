#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "meguide/errors.hpp"
#include "meguide/io.hpp"
#include "meguide/metrics.hpp"
#include "meguide/planetoid.hpp"
#include "meguide/samplers.hpp"
#include "meguide/synthetic.hpp"
#include "meguide/training.hpp"

namespace py = pybind11;
using namespace meguide;

namespace {

py::object json_to_py(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

TrainConfig config_from_dict(const py::dict& d) {
  const auto text = py::module_::import("json").attr("dumps")(d).cast<std::string>();
  return TrainConfig::from_json(nlohmann::json::parse(text));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Metric-guided subgraph sampling and GCN training";

  py::register_exception<Error>(m, "MeguideError", PyExc_RuntimeError);

  py::class_<Graph>(m, "Graph")
      .def_property_readonly("num_nodes", &Graph::num_nodes)
      .def_property_readonly("num_edges", &Graph::num_edges)
      .def_property_readonly("feature_dim", &Graph::feature_dim)
      .def_property_readonly("num_classes", &Graph::num_classes)
      .def_property_readonly("labels", &Graph::labels)
      .def("edges", &Graph::edge_list)
      .def("neighbors", [](const Graph& g, NodeId v) {
        const auto n = g.neighbors(v);
        return std::vector<NodeId>(n.begin(), n.end());
      });

  py::class_<Subgraph>(m, "Subgraph")
      .def_readonly("nodes", &Subgraph::nodes)
      .def_readonly("edges", &Subgraph::edges)
      .def_readonly("root", &Subgraph::root)
      .def_readonly("undersized", &Subgraph::undersized);

  m.def("load_dataset", [](const std::string& dir) { return load_dataset_dir(resolve_dataset_path(dir)).graph; },
        py::arg("path"));
  m.def("convert_planetoid", [](const fs::path& raw, const std::string& name) { return convert_planetoid(raw, name).graph; },
        py::arg("raw_dir"), py::arg("name") = "");
  m.def("path3_graph", &path3_graph);
  m.def("two_cluster_graph", [](double gap, std::uint64_t seed) {
        TwoClusterOptions o;
        o.gap = gap;
        o.seed = seed;
        return two_cluster_graph(o);
      },
      py::arg("gap") = 1.0, py::arg("seed") = 0);
  m.def("planted_graph", [](std::uint64_t seed) {
        PlantedOptions o;
        o.seed = seed;
        return planted_partition_graph(o);
      },
      py::arg("seed") = 0);

  m.def("feature_smoothness", &feature_smoothness_graph, py::arg("graph"));
  m.def("pair_smoothness", &feature_smoothness_pair, py::arg("graph"), py::arg("u"), py::arg("v"));
  m.def("connection_failure_distance", [](const Graph& g, std::vector<NodeId> pool) {
        return connection_failure_distance(g, pool).lambda_d;
      },
      py::arg("graph"), py::arg("pool"));
  m.def("metrics", [](const Graph& g, bool all_labeled) {
        MetricsOptions o;
        o.pool = all_labeled ? PoolKind::all_labeled : PoolKind::train;
        const auto r = compute_metrics(g, o);
        py::dict d;
        d["lambda_f"] = r.lambda_f;
        d["lambda_d"] = r.lambda_d;
        d["expansion_steps"] = expansion_steps_for(r.lambda_d);
        return d;
      },
      py::arg("graph"), py::arg("all_labeled") = false);

  m.def("meguide_sample", [](const Graph& g, double rho, std::uint64_t seed) {
        const EdgeSmoothnessCache cache(g);
        const auto r = compute_metrics(g);
        SamplerConfig cfg;
        cfg.rho = rho;
        Rng rng(seed);
        return meguide_sample(cache, r.lambda_d, r.lambda_f, cfg, rng);
      },
      py::arg("graph"), py::arg("rho") = 0.3, py::arg("seed") = 0);

  m.def("default_config", [] { return json_to_py(TrainConfig{}.to_json()); });
  m.def("train", [](const Graph& g, const py::dict& config) {
        const auto cfg = config_from_dict(config);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(g, cfg);
        }
        return json_to_py(r.report.to_json());
      },
      py::arg("graph"), py::arg("config") = py::dict());
}
