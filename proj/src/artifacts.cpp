#include "meguide/artifacts.hpp"

#include <cstdio>
#include <fstream>

#include "meguide/errors.hpp"

namespace meguide {

using nlohmann::json;
namespace fs = std::filesystem;

json subgraph_to_json(const Subgraph& s) {
  json edges = json::array();
  for (const auto& [u, v] : s.edges) edges.push_back({u, v});
  return json{{"root", s.root},
              {"nodes", s.nodes},
              {"edges", edges},
              {"steps", s.expansion_steps_used},
              {"undersized", s.undersized}};
}

Subgraph subgraph_from_json(const json& j) {
  try {
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) edges.emplace_back(e.at(0).get<NodeId>(), e.at(1).get<NodeId>());
    auto s = make_subgraph(j.at("nodes").get<std::vector<NodeId>>(), std::move(edges),
                           j.at("root").get<NodeId>(), j.value("steps", 0U));
    s.undersized = j.value("undersized", false);
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad subgraph JSON: ") + e.what());
  }
}

void write_json(const json& j, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file.string());
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ValidationError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(file.string(), 0, e.what());
  }
}

namespace {

std::string subgraph_file(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "subgraph_%03zu.json", k);
  return buf;
}

}  // namespace

void write_batch_dir(const BatchSet& batch, const TrainConfig& cfg, const fs::path& dir) {
  fs::create_directories(dir);
  auto manifest = batch_manifest(batch, cfg);
  manifest["config"] = cfg.to_json();
  manifest["num_sources_used"] = batch.num_sources_used;
  for (std::size_t k = 0; k < batch.subgraphs.size(); ++k) {
    const auto name = subgraph_file(k);
    manifest["subgraphs"][k]["file"] = name;
    auto j = subgraph_to_json(batch.subgraphs[k]);
    j["config_hash"] = cfg.hash();
    j["seed"] = cfg.seed + k + 1;
    write_json(j, dir / name);
  }
  write_json(manifest, dir / "manifest.json");
}

LoadedBatch read_batch_dir(const fs::path& dir) {
  const auto manifest = read_json(dir / "manifest.json");
  LoadedBatch out;
  try {
    out.config = TrainConfig::from_json(manifest.at("config"));
    out.batch.lambda_f = manifest.at("lambda_f").get<double>();
    out.batch.lambda_d = manifest.at("lambda_d").get<double>();
    out.batch.steps = manifest.value("expansion_steps", 0U);
    out.batch.num_sources_used = manifest.value("num_sources_used", std::size_t{0});
    for (const auto& entry : manifest.at("subgraphs")) {
      out.batch.subgraphs.push_back(subgraph_from_json(read_json(dir / entry.at("file").get<std::string>())));
    }
  } catch (const json::exception& e) {
    throw ValidationError("bad batch manifest in " + dir.string() + ": " + e.what());
  }
  if (out.batch.subgraphs.empty()) throw ValidationError("batch manifest lists no subgraph");
  return out;
}

json predictions_to_json(const Predictions& p, const TrainConfig& cfg, std::size_t extras_count) {
  json rows = json::array();
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    std::vector<double> probs(p.probabilities.cols());
    for (Eigen::Index j = 0; j < p.probabilities.cols(); ++j) probs[j] = p.probabilities(static_cast<Eigen::Index>(i), j);
    rows.push_back({{"node", p.nodes[i]}, {"label", p.labels[i]}, {"probabilities", probs}});
  }
  return json{{"config_hash", cfg.hash()},
              {"seed", cfg.seed},
              {"extras_count", extras_count},
              {"predictions", rows}};
}

void write_curve_csv(const RunReport& report, const fs::path& file) {
  std::ofstream out(file);
  if (!out) throw ValidationError("cannot write " + file.string());
  out << "# config_hash=" << report.config_hash << " seed=" << report.seed << '\n';
  out << "iteration,loss,val_acc\n";
  char buf[96];
  for (const auto& p : report.curve) {
    if (p.val_acc) {
      std::snprintf(buf, sizeof buf, "%llu,%.17g,%.17g\n", static_cast<unsigned long long>(p.iteration),
                    p.loss, *p.val_acc);
    } else {
      std::snprintf(buf, sizeof buf, "%llu,%.17g,\n", static_cast<unsigned long long>(p.iteration), p.loss);
    }
    out << buf;
  }
}

}  // namespace meguide
