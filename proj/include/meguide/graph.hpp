#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace meguide {

using NodeId = std::uint32_t;
using Edge = std::pair<NodeId, NodeId>;

inline constexpr std::int32_t kUnlabeled = -1;

enum class Split : std::uint8_t { none = 0, train = 1, val = 2, test = 3 };

const char* to_string(Split s);
std::optional<Split> split_from_string(std::string_view token);

// Counters reported by Graph::from_edges while canonicalising input.
struct BuildStats {
  std::size_t input_records = 0;
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

// Immutable undirected graph: symmetric CSR without self-loops or duplicate
// edges, sorted neighbor lists, dense float features, labels and split masks.
class Graph {
 public:
  Graph() = default;

  // Takes an already canonical CSR and validates every invariant.
  Graph(std::vector<std::uint64_t> row_offsets, std::vector<NodeId> col_indices,
        std::vector<float> features, std::size_t feature_dim, std::vector<std::int32_t> labels,
        std::vector<Split> splits, std::size_t num_classes);

  // Builds the canonical CSR from an arbitrary (possibly directed, duplicated,
  // self-looped) edge list. num_classes == 0 infers max(label) + 1.
  static Graph from_edges(std::size_t num_nodes, std::span<const Edge> edges,
                          std::vector<float> features, std::size_t feature_dim,
                          std::vector<std::int32_t> labels, std::vector<Split> splits,
                          std::size_t num_classes = 0, BuildStats* stats = nullptr);

  std::size_t num_nodes() const noexcept { return labels_.size(); }
  // Undirected edge count; each edge appears twice in the CSR.
  std::size_t num_edges() const noexcept { return col_indices_.size() / 2; }
  std::size_t feature_dim() const noexcept { return feature_dim_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  std::span<const NodeId> neighbors(NodeId v) const;
  std::size_t degree(NodeId v) const;
  bool has_edge(NodeId u, NodeId v) const;
  // Position of v inside u's CSR row, if adjacent.
  std::optional<std::uint64_t> edge_slot(NodeId u, NodeId v) const;

  std::span<const float> features(NodeId v) const;
  std::span<const float> feature_data() const noexcept { return features_; }
  std::int32_t label(NodeId v) const;
  Split split(NodeId v) const;
  bool in_split(NodeId v, Split s) const { return split(v) == s; }

  const std::vector<std::uint64_t>& row_offsets() const noexcept { return row_offsets_; }
  const std::vector<NodeId>& col_indices() const noexcept { return col_indices_; }
  const std::vector<std::int32_t>& labels() const noexcept { return labels_; }
  const std::vector<Split>& splits() const noexcept { return splits_; }

  std::vector<NodeId> nodes_in(Split s) const;
  std::vector<NodeId> labeled_nodes() const;
  // Every undirected edge once as (u, v) with u < v, in CSR order.
  std::vector<Edge> edge_list() const;

  // Same graph with every feature row scaled to unit L1 norm (zero rows kept).
  Graph row_normalized() const;

  // Throws ValidationError when an invariant is violated.
  void validate() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  void check_node(NodeId v) const;

  std::vector<std::uint64_t> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  std::vector<float> features_;
  std::size_t feature_dim_ = 0;
  std::vector<std::int32_t> labels_;
  std::vector<Split> splits_;
  std::size_t num_classes_ = 0;
};

struct DatasetBundle {
  Graph graph;
  std::string name;
  std::string provenance;
  BuildStats stats;
};

// A sampled node subset. Local ids are positions in `nodes`, which is kept
// sorted by global id.
struct Subgraph {
  std::vector<NodeId> nodes;
  std::vector<Edge> edges;  // global ids, u < v, sorted
  NodeId root = 0;
  std::uint32_t expansion_steps_used = 0;
  bool undersized = false;  // sampler could not reach min_size

  std::size_t size() const noexcept { return nodes.size(); }
  std::optional<std::uint32_t> local_of(NodeId global) const;
  NodeId global_of(std::uint32_t local) const { return nodes.at(local); }
  bool contains(NodeId global) const { return local_of(global).has_value(); }

  // Edges translated to local ids.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> local_edges() const;

  friend bool operator==(const Subgraph&, const Subgraph&) = default;
};

// All edges of g with both endpoints in `nodes`. Root is the smallest id
// unless given.
Subgraph induced_subgraph(const Graph& g, std::span<const NodeId> nodes,
                          std::optional<NodeId> root = std::nullopt);

// Builds a Subgraph from an arbitrary node set and edge set (normalises
// ordering, validates membership).
Subgraph make_subgraph(std::vector<NodeId> nodes, std::vector<Edge> edges, NodeId root,
                       std::uint32_t steps);

}  // namespace meguide
