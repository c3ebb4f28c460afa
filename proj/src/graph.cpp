#include "meguide/graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "meguide/errors.hpp"

namespace meguide {

const char* to_string(Split s) {
  switch (s) {
    case Split::train:
      return "train";
    case Split::val:
      return "val";
    case Split::test:
      return "test";
    case Split::none:
      break;
  }
  return "none";
}

std::optional<Split> split_from_string(std::string_view token) {
  if (token == "train") return Split::train;
  if (token == "val") return Split::val;
  if (token == "test") return Split::test;
  if (token == "none") return Split::none;
  return std::nullopt;
}

Graph::Graph(std::vector<std::uint64_t> row_offsets, std::vector<NodeId> col_indices,
             std::vector<float> features, std::size_t feature_dim,
             std::vector<std::int32_t> labels, std::vector<Split> splits,
             std::size_t num_classes)
    : row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      features_(std::move(features)),
      feature_dim_(feature_dim),
      labels_(std::move(labels)),
      splits_(std::move(splits)),
      num_classes_(num_classes) {
  validate();
}

Graph Graph::from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                        std::vector<float> features, std::size_t feature_dim,
                        std::vector<std::int32_t> labels, std::vector<Split> splits,
                        std::size_t num_classes, BuildStats* stats) {
  BuildStats local;
  local.input_records = edges.size();

  std::vector<Edge> directed;
  directed.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw ValidationError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") references a node outside [0, " + std::to_string(num_nodes) +
                            ")");
    }
    if (u == v) {
      ++local.self_loops_dropped;
      continue;
    }
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  const std::size_t before = directed.size();
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());
  // Each undirected duplicate removes two directed entries.
  local.duplicates_dropped = (before - directed.size()) / 2;

  std::vector<std::uint64_t> offsets(num_nodes + 1, 0);
  for (const auto& e : directed) ++offsets[e.first + 1];
  for (std::size_t i = 0; i < num_nodes; ++i) offsets[i + 1] += offsets[i];
  std::vector<NodeId> cols;
  cols.reserve(directed.size());
  for (const auto& e : directed) cols.push_back(e.second);

  if (num_classes == 0) {
    std::int32_t max_label = -1;
    for (auto l : labels) max_label = std::max(max_label, l);
    num_classes = static_cast<std::size_t>(max_label + 1);
  }
  if (stats != nullptr) *stats = local;
  return Graph(std::move(offsets), std::move(cols), std::move(features), feature_dim,
               std::move(labels), std::move(splits), num_classes);
}

void Graph::validate() const {
  const std::size_t n = labels_.size();
  if (row_offsets_.size() != n + 1) {
    throw ValidationError("row_offsets length " + std::to_string(row_offsets_.size()) +
                          " != num_nodes + 1 (" + std::to_string(n + 1) + ")");
  }
  if (row_offsets_.front() != 0 || row_offsets_.back() != col_indices_.size()) {
    throw ValidationError("row_offsets do not span col_indices");
  }
  if (splits_.size() != n) throw ValidationError("split array length != num_nodes");
  if (features_.size() != n * feature_dim_) {
    throw ShapeError("feature matrix has " + std::to_string(features_.size()) +
                     " entries, expected " + std::to_string(n) + " x " +
                     std::to_string(feature_dim_));
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (row_offsets_[v] > row_offsets_[v + 1]) throw ValidationError("row_offsets not monotone");
    for (std::uint64_t k = row_offsets_[v]; k < row_offsets_[v + 1]; ++k) {
      const NodeId u = col_indices_[k];
      if (u >= n) throw ValidationError("column index out of range at node " + std::to_string(v));
      if (u == v) throw ValidationError("self-loop stored at node " + std::to_string(v));
      if (k > row_offsets_[v] && col_indices_[k - 1] >= u) {
        throw ValidationError("neighbors of node " + std::to_string(v) +
                              " not strictly ascending");
      }
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    for (std::uint64_t k = row_offsets_[v]; k < row_offsets_[v + 1]; ++k) {
      if (!has_edge(col_indices_[k], static_cast<NodeId>(v))) {
        throw ValidationError("CSR not symmetric at edge (" + std::to_string(v) + ", " +
                              std::to_string(col_indices_[k]) + ")");
      }
    }
  }
  for (std::size_t v = 0; v < n; ++v) {
    const auto l = labels_[v];
    if (l != kUnlabeled && (l < 0 || static_cast<std::size_t>(l) >= num_classes_)) {
      throw ValidationError("label " + std::to_string(l) + " of node " + std::to_string(v) +
                            " outside [0, " + std::to_string(num_classes_) + ")");
    }
    if (splits_[v] == Split::train && l == kUnlabeled) {
      throw ValidationError("train node " + std::to_string(v) + " has no label");
    }
  }
  for (float x : features_) {
    if (!std::isfinite(x)) throw ValidationError("non-finite feature value");
  }
}

void Graph::check_node(NodeId v) const {
  if (v >= num_nodes()) {
    throw IndexError("node " + std::to_string(v) + " out of range [0, " +
                     std::to_string(num_nodes()) + ")");
  }
}

std::span<const NodeId> Graph::neighbors(NodeId v) const {
  check_node(v);
  return {col_indices_.data() + row_offsets_[v], col_indices_.data() + row_offsets_[v + 1]};
}

std::size_t Graph::degree(NodeId v) const {
  check_node(v);
  return row_offsets_[v + 1] - row_offsets_[v];
}

std::optional<std::uint64_t> Graph::edge_slot(NodeId u, NodeId v) const {
  const auto nb = neighbors(u);
  const auto it = std::lower_bound(nb.begin(), nb.end(), v);
  if (it == nb.end() || *it != v) return std::nullopt;
  return row_offsets_[u] + static_cast<std::uint64_t>(it - nb.begin());
}

bool Graph::has_edge(NodeId u, NodeId v) const { return edge_slot(u, v).has_value(); }

std::span<const float> Graph::features(NodeId v) const {
  check_node(v);
  return {features_.data() + static_cast<std::size_t>(v) * feature_dim_, feature_dim_};
}

std::int32_t Graph::label(NodeId v) const {
  check_node(v);
  return labels_[v];
}

Split Graph::split(NodeId v) const {
  check_node(v);
  return splits_[v];
}

std::vector<NodeId> Graph::nodes_in(Split s) const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_nodes(); ++v) {
    if (splits_[v] == s) out.push_back(v);
  }
  return out;
}

std::vector<NodeId> Graph::labeled_nodes() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < num_nodes(); ++v) {
    if (labels_[v] != kUnlabeled) out.push_back(v);
  }
  return out;
}

std::vector<Edge> Graph::edge_list() const {
  std::vector<Edge> out;
  out.reserve(num_edges());
  for (NodeId u = 0; u < num_nodes(); ++u) {
    for (std::uint64_t k = row_offsets_[u]; k < row_offsets_[u + 1]; ++k) {
      if (u < col_indices_[k]) out.emplace_back(u, col_indices_[k]);
    }
  }
  return out;
}

Graph Graph::row_normalized() const {
  Graph out = *this;
  for (std::size_t v = 0; v < num_nodes(); ++v) {
    float* row = out.features_.data() + v * feature_dim_;
    double sum = 0.0;
    for (std::size_t j = 0; j < feature_dim_; ++j) sum += std::abs(row[j]);
    if (sum == 0.0) continue;
    for (std::size_t j = 0; j < feature_dim_; ++j) {
      row[j] = static_cast<float>(static_cast<double>(row[j]) / sum);
    }
  }
  return out;
}

std::optional<std::uint32_t> Subgraph::local_of(NodeId global) const {
  const auto it = std::lower_bound(nodes.begin(), nodes.end(), global);
  if (it == nodes.end() || *it != global) return std::nullopt;
  return static_cast<std::uint32_t>(it - nodes.begin());
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> Subgraph::local_edges() const {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  out.reserve(edges.size());
  for (const auto& [u, v] : edges) out.emplace_back(*local_of(u), *local_of(v));
  return out;
}

Subgraph make_subgraph(std::vector<NodeId> nodes, std::vector<Edge> edges, NodeId root,
                       std::uint32_t steps) {
  Subgraph sub;
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  sub.nodes = std::move(nodes);
  for (auto& e : edges) {
    if (e.first > e.second) std::swap(e.first, e.second);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  sub.edges = std::move(edges);
  sub.root = root;
  sub.expansion_steps_used = steps;
  if (!sub.contains(root)) throw ValidationError("subgraph root not in node set");
  for (const auto& [u, v] : sub.edges) {
    if (u == v || !sub.contains(u) || !sub.contains(v)) {
      throw ValidationError("subgraph edge endpoint outside node set");
    }
  }
  return sub;
}

Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes,
                          std::optional<NodeId> root) {
  if (nodes.empty()) throw EmptyInputError("induced_subgraph: empty node set");
  std::vector<NodeId> sorted(nodes.begin(), nodes.end());
  for (NodeId v : sorted) {
    if (v >= g.num_nodes()) {
      throw IndexError("induced_subgraph: node " + std::to_string(v) + " out of range");
    }
  }
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  Subgraph sub;
  sub.nodes = std::move(sorted);
  for (NodeId u : sub.nodes) {
    // Merge the sorted neighbor list with the sorted node set.
    const auto nb = g.neighbors(u);
    auto it = std::upper_bound(sub.nodes.begin(), sub.nodes.end(), u);
    for (NodeId v : nb) {
      if (v <= u) continue;
      it = std::lower_bound(it, sub.nodes.end(), v);
      if (it == sub.nodes.end()) break;
      if (*it == v) sub.edges.emplace_back(u, v);
    }
  }
  sub.root = root.value_or(sub.nodes.front());
  if (!sub.contains(sub.root)) throw PreconditionError("induced_subgraph: root not in node set");
  return sub;
}

}  // namespace meguide
