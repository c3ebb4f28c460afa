#include "meguide/planetoid.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "meguide/errors.hpp"
#include "meguide/log.hpp"
#include "meguide/pickle.hpp"

namespace meguide {
namespace {

namespace fs = std::filesystem;
using pickle::Array;
using pickle::Value;
using pickle::ValuePtr;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConversionError("missing Planetoid file: " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ValuePtr load_pickle(const fs::path& p) { return pickle::loads(read_file(p), p.string()); }

Array load_array(const fs::path& p) {
  try {
    return pickle::to_array(load_pickle(p));
  } catch (const ConversionError& e) {
    throw ConversionError(p.string() + ": " + e.what());
  }
}

std::int32_t row_label(const Array& a, std::size_t r) {
  if (a.shape.size() == 1) return static_cast<std::int32_t>(a.data[r]);
  std::int32_t best = kUnlabeled;
  double best_v = 0.0;
  for (std::size_t j = 0; j < a.cols(); ++j) {
    const double v = a.data[r * a.cols() + j];
    if (v > best_v) {
      best_v = v;
      best = static_cast<std::int32_t>(j);
    }
  }
  return best;
}

std::string infer_name(const fs::path& dir) {
  std::string found;
  if (!fs::is_directory(dir)) throw ConversionError("raw directory not found: " + dir.string());
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto f = e.path().filename().string();
    if (f.size() > 6 && f.rfind("ind.", 0) == 0 && f.substr(f.size() - 2) == ".x") {
      if (!found.empty()) throw ConversionError("several datasets in " + dir.string() + "; pass a name");
      found = f.substr(4, f.size() - 6);
    }
  }
  if (found.empty()) throw ConversionError("missing Planetoid file: no ind.<name>.x in " + dir.string());
  return found;
}

}  // namespace

DatasetBundle convert_planetoid(const fs::path& raw_dir, std::string name) {
  if (name.empty()) name = infer_name(raw_dir);
  auto file = [&](const std::string& suffix) {
    const auto p = raw_dir / ("ind." + name + "." + suffix);
    if (!fs::exists(p)) throw ConversionError("missing Planetoid file: " + p.string());
    return p;
  };
  const auto x_path = file("x");
  const auto y_path = file("y");
  const auto tx_path = file("tx");
  const auto ty_path = file("ty");
  const auto allx_path = file("allx");
  const auto ally_path = file("ally");
  const auto graph_path = file("graph");
  const auto index_path = file("test.index");

  const Array y = load_array(y_path);
  const Array tx = load_array(tx_path);
  const Array ty = load_array(ty_path);
  const Array allx = load_array(allx_path);
  const Array ally = load_array(ally_path);
  (void)load_array(x_path);  // the first |y| rows of allx; read to validate

  std::vector<std::size_t> test_index;
  {
    std::istringstream in(read_file(index_path));
    std::string tok;
    while (in >> tok) {
      try {
        test_index.push_back(std::stoul(tok));
      } catch (const std::exception&) {
        throw ConversionError(index_path.string() + ": bad test index '" + tok + "'");
      }
    }
  }
  if (test_index.size() != tx.rows() || tx.rows() != ty.rows()) {
    throw ConversionError("test index, tx and ty row counts disagree");
  }
  if (allx.rows() != ally.rows()) throw ConversionError("allx and ally row counts disagree");
  if (allx.cols() != tx.cols()) throw ConversionError("allx and tx feature widths disagree");
  if (test_index.empty()) throw ConversionError("empty test index");

  const std::size_t lo = *std::min_element(test_index.begin(), test_index.end());
  const std::size_t hi = *std::max_element(test_index.begin(), test_index.end());
  if (lo != allx.rows()) {
    throw ConversionError("test ids start at " + std::to_string(lo) + " but allx has " +
                          std::to_string(allx.rows()) + " rows");
  }
  // Test rows cover [lo, hi]; ids missing from the index (Citeseer) become
  // featureless unlabeled nodes.
  const std::size_t n = hi + 1;
  const std::size_t d = allx.cols();
  const std::size_t c = ally.cols();
  std::vector<float> features(n * d, 0.0F);
  std::vector<std::int32_t> labels(n, kUnlabeled);
  std::vector<Split> splits(n, Split::none);
  for (std::size_t r = 0; r < allx.rows(); ++r) {
    for (std::size_t j = 0; j < d; ++j) features[r * d + j] = static_cast<float>(allx.data[r * d + j]);
    labels[r] = row_label(ally, r);
  }
  std::vector<std::size_t> sorted_index = test_index;
  std::sort(sorted_index.begin(), sorted_index.end());
  // Row k of tx belongs to node test_index[k].
  for (std::size_t k = 0; k < test_index.size(); ++k) {
    const std::size_t v = test_index[k];
    for (std::size_t j = 0; j < d; ++j) features[v * d + j] = static_cast<float>(tx.data[k * d + j]);
    labels[v] = row_label(ty, k);
  }
  const std::size_t n_train = y.rows();
  if (n_train > allx.rows()) throw ConversionError("y has more rows than allx");
  const std::size_t val_end = std::min(n_train + 500, allx.rows());
  for (std::size_t v = 0; v < n_train; ++v) splits[v] = Split::train;
  for (std::size_t v = n_train; v < val_end; ++v) splits[v] = Split::val;
  for (std::size_t v : sorted_index) splits[v] = Split::test;
  sorted_index.erase(std::unique(sorted_index.begin(), sorted_index.end()), sorted_index.end());
  const std::size_t padded = n - allx.rows() - sorted_index.size();
  for (std::size_t v = 0; v < n_train; ++v) {
    if (labels[v] == kUnlabeled) throw ConversionError("train node " + std::to_string(v) + " has no label");
  }

  const auto g = load_pickle(graph_path);
  if (g->kind != Value::Kind::dict && g->kind != Value::Kind::object) {
    throw ConversionError(graph_path.string() + ": adjacency is not a dict");
  }
  std::vector<Edge> edges;
  std::size_t records = 0;
  for (const auto& [k, v] : g->entries) {
    if (k->kind != Value::Kind::integer || k->integer < 0) {
      throw ConversionError(graph_path.string() + ": non-integer node key");
    }
    if (v->kind != Value::Kind::list && v->kind != Value::Kind::tuple) {
      throw ConversionError(graph_path.string() + ": neighbor list is not a list");
    }
    for (const auto& w : v->items) {
      if (w->kind != Value::Kind::integer || w->integer < 0) {
        throw ConversionError(graph_path.string() + ": non-integer neighbor");
      }
      const auto a = static_cast<std::size_t>(k->integer);
      const auto b = static_cast<std::size_t>(w->integer);
      if (a >= n || b >= n) {
        throw ConversionError(graph_path.string() + ": node id " + std::to_string(std::max(a, b)) +
                              " outside [0, " + std::to_string(n) + ")");
      }
      edges.emplace_back(static_cast<NodeId>(a), static_cast<NodeId>(b));
      ++records;
    }
  }

  DatasetBundle out;
  out.name = name;
  out.graph = Graph::from_edges(n, edges, std::move(features), d, std::move(labels), std::move(splits),
                                c, &out.stats);
  out.provenance = "planetoid:" + fs::absolute(raw_dir).string() + " (ind." + name +
                   ".*; adjacency records " + std::to_string(records) + ", padded test ids " +
                   std::to_string(padded) + ")";
  log_info("converted " + name + ": " + std::to_string(out.graph.num_nodes()) + " nodes, " +
           std::to_string(out.graph.num_edges()) + " undirected edges from " +
           std::to_string(records) + " adjacency records");
  return out;
}

}  // namespace meguide
