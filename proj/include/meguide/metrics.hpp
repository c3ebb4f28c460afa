#pragma once

#include <atomic>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "meguide/graph.hpp"

namespace meguide {

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

// Graph feature smoothness: || sum_v (sum_{v' in N(v)} (x_v - x_v'))^2 ||_1 / (|E| d),
// the square taken elementwise on each node's summed difference vector and
// |E| counting undirected edges once. Accumulates in double.
double feature_smoothness_graph(const Graph& g);

// ||(x_a - x_b)^2||_1 / d for an adjacent pair. Throws PreconditionError
// when the nodes are not adjacent.
double feature_smoothness_pair(const Graph& g, NodeId vi, NodeId vj);

// Same quantity without the adjacency check.
double pair_smoothness(std::span<const float> a, std::span<const float> b);

// Memoised per-edge smoothness keyed by undirected edge. Safe for concurrent
// get() calls: racing writers store the same value.
class EdgeSmoothnessCache {
 public:
  explicit EdgeSmoothnessCache(const Graph& g);

  // Requires (u, v) to be an edge of the graph.
  double get(NodeId u, NodeId v) const;
  const Graph& graph() const noexcept { return *graph_; }
  std::size_t computed() const;

 private:
  const Graph* graph_;
  mutable std::vector<std::atomic<double>> values_;
};

// BFS hop counts from src to every node; kUnreachable where disconnected.
std::vector<std::uint32_t> bfs_distances(const Graph& g, NodeId src);

std::unordered_map<NodeId, std::uint32_t> hop_distance(const Graph& g, NodeId src,
                                                       std::span<const NodeId> targets);

struct CfdOptions {
  std::size_t pool_cap = 2000;  // pools above this are uniformly subsampled
  std::uint64_t seed = 0;       // subsampling seed
};

struct CfdResult {
  double lambda_d = 0.0;
  std::size_t num_sources_used = 0;
};

// Average over the pool of each node's maximum hop distance to a reachable
// same-label pool node (0 when none). With the train-masked nodes as pool this
// is the label-estimated variant.
CfdResult connection_failure_distance(const Graph& g, std::span<const NodeId> node_pool,
                                      const CfdOptions& options = {});

enum class PoolKind { train, all_labeled };
enum class CfdMode { exact, estimated };

struct MetricsReport {
  double lambda_f = 0.0;
  double lambda_d = 0.0;
  CfdMode lambda_d_mode = CfdMode::estimated;
  std::size_t num_sources_used = 0;
  std::optional<std::map<Edge, double>> edge_smoothness;
};

struct MetricsOptions {
  PoolKind pool = PoolKind::train;
  CfdOptions cfd;
  bool emit_edge_smoothness = false;
};

MetricsReport compute_metrics(const Graph& g, const MetricsOptions& options = {});

// Same-label pair statistics per hop distance within a labeled pool.
struct HopBucket {
  std::uint32_t hop = 0;
  std::uint64_t same_label_pairs = 0;
  std::uint64_t total_pairs = 0;
  double fraction() const {
    return total_pairs == 0 ? 0.0
                            : static_cast<double>(same_label_pairs) /
                                  static_cast<double>(total_pairs);
  }
};

// Buckets every unordered reachable pair of the pool by hop distance.
std::vector<HopBucket> theorem2_property_check(const Graph& g, std::span<const NodeId> node_pool);

// Pools the buckets with hop in [lo, hi] into one fraction.
double same_label_fraction(std::span<const HopBucket> buckets, std::uint32_t lo,
                           std::uint32_t hi);

// Mean pairwise smoothness of edges crossing clusters minus that of edges
// inside a cluster. Edges of the missing kind contribute a mean of 0.
double smoothness_gap_statistic(const Graph& g, std::span<const int> cluster);

}  // namespace meguide
