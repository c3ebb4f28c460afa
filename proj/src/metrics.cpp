#include "meguide/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "meguide/errors.hpp"
#include "meguide/parallel.hpp"
#include "meguide/rng.hpp"

namespace meguide {

double feature_smoothness_graph(const Graph& g) {
  if (g.num_edges() == 0) throw UndefinedMetricError("feature smoothness undefined: graph has no edges");
  const std::size_t d = g.feature_dim();
  if (d == 0) throw UndefinedMetricError("feature smoothness undefined: feature dimension is 0");

  std::vector<double> per_node(g.num_nodes(), 0.0);
  parallel_for(g.num_nodes(), [&](std::size_t idx) {
    const auto v = static_cast<NodeId>(idx);
    const auto nb = g.neighbors(v);
    if (nb.empty()) return;
    const auto xv = g.features(v);
    std::vector<double> diff(d);
    const auto deg = static_cast<double>(nb.size());
    for (std::size_t j = 0; j < d; ++j) diff[j] = deg * static_cast<double>(xv[j]);
    for (NodeId u : nb) {
      const auto xu = g.features(u);
      for (std::size_t j = 0; j < d; ++j) diff[j] -= static_cast<double>(xu[j]);
    }
    double s = 0.0;
    for (double x : diff) s += x * x;
    per_node[idx] = s;
  });
  const double total = std::accumulate(per_node.begin(), per_node.end(), 0.0);
  return total / (static_cast<double>(g.num_edges()) * static_cast<double>(d));
}

double pair_smoothness(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw ShapeError("pair_smoothness: dimension mismatch");
  if (a.empty()) throw UndefinedMetricError("pair_smoothness: feature dimension is 0");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double diff = static_cast<double>(a[j]) - static_cast<double>(b[j]);
    s += diff * diff;
  }
  return s / static_cast<double>(a.size());
}

double feature_smoothness_pair(const Graph& g, NodeId vi, NodeId vj) {
  if (!g.has_edge(vi, vj)) {
    throw PreconditionError("feature_smoothness_pair: nodes " + std::to_string(vi) + " and " +
                            std::to_string(vj) + " are not adjacent");
  }
  // Canonical argument order keeps the value bit-identical under swapping.
  if (vi > vj) std::swap(vi, vj);
  return pair_smoothness(g.features(vi), g.features(vj));
}

EdgeSmoothnessCache::EdgeSmoothnessCache(const Graph& g)
    : graph_(&g), values_(g.col_indices().size()) {
  for (auto& v : values_) v.store(std::numeric_limits<double>::quiet_NaN(), std::memory_order_relaxed);
}

double EdgeSmoothnessCache::get(NodeId u, NodeId v) const {
  if (u > v) std::swap(u, v);
  const auto slot = graph_->edge_slot(u, v);
  if (!slot) {
    throw PreconditionError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") not in graph");
  }
  auto& cell = values_[*slot];
  double value = cell.load(std::memory_order_relaxed);
  if (std::isnan(value)) {
    value = pair_smoothness(graph_->features(u), graph_->features(v));
    cell.store(value, std::memory_order_relaxed);
  }
  return value;
}

std::size_t EdgeSmoothnessCache::computed() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += !std::isnan(v.load(std::memory_order_relaxed));
  return n;
}

std::vector<std::uint32_t> bfs_distances(const Graph& g, NodeId src) {
  if (src >= g.num_nodes()) throw IndexError("bfs source " + std::to_string(src) + " out of range");
  std::vector<std::uint32_t> dist(g.num_nodes(), kUnreachable);
  std::vector<NodeId> frontier{src};
  std::vector<NodeId> next;
  dist[src] = 0;
  std::uint32_t level = 0;
  while (!frontier.empty()) {
    ++level;
    next.clear();
    for (NodeId u : frontier) {
      for (NodeId w : g.neighbors(u)) {
        if (dist[w] == kUnreachable) {
          dist[w] = level;
          next.push_back(w);
        }
      }
    }
    frontier.swap(next);
  }
  return dist;
}

std::unordered_map<NodeId, std::uint32_t> hop_distance(const Graph& g, NodeId src,
                                                       std::span<const NodeId> targets) {
  for (NodeId t : targets) {
    if (t >= g.num_nodes()) throw IndexError("hop_distance target " + std::to_string(t) + " out of range");
  }
  const auto dist = bfs_distances(g, src);
  std::unordered_map<NodeId, std::uint32_t> out;
  for (NodeId t : targets) out[t] = dist[t];
  return out;
}

namespace {

std::vector<NodeId> checked_pool(const Graph& g, std::span<const NodeId> node_pool) {
  if (node_pool.empty()) throw EmptyInputError("node pool is empty");
  std::vector<NodeId> pool(node_pool.begin(), node_pool.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  for (NodeId v : pool) {
    if (v >= g.num_nodes()) throw IndexError("pool node " + std::to_string(v) + " out of range");
    if (g.label(v) == kUnlabeled) {
      throw PreconditionError("pool node " + std::to_string(v) + " is unlabeled");
    }
  }
  return pool;
}

}  // namespace

CfdResult connection_failure_distance(const Graph& g, std::span<const NodeId> node_pool,
                                      const CfdOptions& options) {
  auto pool = checked_pool(g, node_pool);
  if (options.pool_cap > 0 && pool.size() > options.pool_cap) {
    Rng rng(options.seed);
    rng.shuffle(pool);
    pool.resize(options.pool_cap);
    std::sort(pool.begin(), pool.end());
  }

  std::vector<double> per_source(pool.size(), 0.0);
  parallel_for(pool.size(), [&](std::size_t i) {
    const NodeId src = pool[i];
    const auto dist = bfs_distances(g, src);
    std::uint32_t best = 0;
    for (NodeId v : pool) {
      if (v == src || g.label(v) != g.label(src) || dist[v] == kUnreachable) continue;
      best = std::max(best, dist[v]);
    }
    per_source[i] = static_cast<double>(best);
  });
  CfdResult out;
  out.num_sources_used = pool.size();
  out.lambda_d = std::accumulate(per_source.begin(), per_source.end(), 0.0) /
                 static_cast<double>(pool.size());
  return out;
}

MetricsReport compute_metrics(const Graph& g, const MetricsOptions& options) {
  MetricsReport report;
  report.lambda_f = feature_smoothness_graph(g);
  const auto pool =
      options.pool == PoolKind::train ? g.nodes_in(Split::train) : g.labeled_nodes();
  const auto cfd = connection_failure_distance(g, pool, options.cfd);
  report.lambda_d = cfd.lambda_d;
  report.num_sources_used = cfd.num_sources_used;
  // Exact: every labeled node, no subsampling.
  const bool exact =
      options.pool == PoolKind::all_labeled && cfd.num_sources_used == pool.size();
  report.lambda_d_mode = exact ? CfdMode::exact : CfdMode::estimated;
  if (options.emit_edge_smoothness) {
    std::map<Edge, double> per_edge;
    for (const auto& e : g.edge_list()) per_edge[e] = feature_smoothness_pair(g, e.first, e.second);
    report.edge_smoothness = std::move(per_edge);
  }
  return report;
}

std::vector<HopBucket> theorem2_property_check(const Graph& g, std::span<const NodeId> node_pool) {
  const auto pool = checked_pool(g, node_pool);
  std::vector<std::vector<HopBucket>> partial(pool.size());
  parallel_for(pool.size(), [&](std::size_t i) {
    const auto dist = bfs_distances(g, pool[i]);
    auto& buckets = partial[i];
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      const auto h = dist[pool[j]];
      if (h == kUnreachable) continue;
      if (buckets.size() <= h) buckets.resize(h + 1);
      ++buckets[h].total_pairs;
      buckets[h].same_label_pairs += g.label(pool[i]) == g.label(pool[j]);
    }
  });
  std::vector<HopBucket> merged;
  for (const auto& buckets : partial) {
    if (merged.size() < buckets.size()) merged.resize(buckets.size());
    for (std::size_t h = 0; h < buckets.size(); ++h) {
      merged[h].total_pairs += buckets[h].total_pairs;
      merged[h].same_label_pairs += buckets[h].same_label_pairs;
    }
  }
  for (std::size_t h = 0; h < merged.size(); ++h) merged[h].hop = static_cast<std::uint32_t>(h);
  // Hop 0 never occurs between distinct nodes.
  if (!merged.empty()) merged.erase(merged.begin());
  return merged;
}

double same_label_fraction(std::span<const HopBucket> buckets, std::uint32_t lo,
                           std::uint32_t hi) {
  std::uint64_t same = 0;
  std::uint64_t total = 0;
  for (const auto& b : buckets) {
    if (b.hop < lo || b.hop > hi) continue;
    same += b.same_label_pairs;
    total += b.total_pairs;
  }
  return total == 0 ? 0.0 : static_cast<double>(same) / static_cast<double>(total);
}

double smoothness_gap_statistic(const Graph& g, std::span<const int> cluster) {
  if (cluster.size() != g.num_nodes()) throw ShapeError("cluster assignment length != num_nodes");
  double inter = 0.0;
  double intra = 0.0;
  std::size_t n_inter = 0;
  std::size_t n_intra = 0;
  for (const auto& [u, v] : g.edge_list()) {
    const double s = pair_smoothness(g.features(u), g.features(v));
    if (cluster[u] == cluster[v]) {
      intra += s;
      ++n_intra;
    } else {
      inter += s;
      ++n_inter;
    }
  }
  const double mean_inter = n_inter == 0 ? 0.0 : inter / static_cast<double>(n_inter);
  const double mean_intra = n_intra == 0 ? 0.0 : intra / static_cast<double>(n_intra);
  return mean_inter - mean_intra;
}

}  // namespace meguide
