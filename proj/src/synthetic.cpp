#include "meguide/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "meguide/errors.hpp"
#include "meguide/rng.hpp"

namespace meguide {

Graph path3_graph() {
  const std::vector<Edge> edges{{0, 1}, {1, 2}};
  return Graph::from_edges(3, edges, {1.0F, 0.0F, 0.0F, 1.0F, 1.0F, 1.0F}, 2, {0, 1, 0},
                           {Split::train, Split::val, Split::test}, 2);
}

Graph triangle_graph() {
  const std::vector<Edge> edges{{0, 1}, {1, 2}, {0, 2}};
  return Graph::from_edges(3, edges, {0.0F, 0.0F, 1.0F, 0.0F, 0.0F, 2.0F}, 2, {0, 0, 1},
                           {Split::train, Split::train, Split::train}, 2);
}

Graph two_cluster_graph(const TwoClusterOptions& o) {
  if (o.nodes_per_cluster < 1 || o.feature_dim < 1) throw ConfigError("two-cluster: empty shape");
  if (o.p_in < 0 || o.p_in > 1 || o.p_out < 0 || o.p_out > 1) {
    throw ConfigError("two-cluster: probabilities must be in [0, 1]");
  }
  Rng rng(o.seed);
  const std::uint32_t k = o.nodes_per_cluster;
  const std::uint32_t n = 2 * k;
  std::vector<float> features(static_cast<std::size_t>(n) * o.feature_dim);
  std::vector<std::int32_t> labels(n);
  std::vector<Split> splits(n);
  const auto n_train = static_cast<std::uint32_t>(std::ceil(o.train_fraction * k));
  for (std::uint32_t v = 0; v < n; ++v) {
    const std::uint32_t c = v / k;
    const std::uint32_t pos = v % k;
    labels[v] = static_cast<std::int32_t>(c);
    splits[v] = pos < n_train ? Split::train : pos < 2 * n_train ? Split::val : Split::test;
    const double mean = c == 0 ? 0.0 : o.gap;
    for (std::uint32_t j = 0; j < o.feature_dim; ++j) {
      features[static_cast<std::size_t>(v) * o.feature_dim + j] =
          static_cast<float>(mean + o.noise * rng.normal());
    }
  }
  std::vector<Edge> edges;
  for (std::uint32_t u = 0; u < n; ++u) {
    for (std::uint32_t v = u + 1; v < n; ++v) {
      const double p = (u / k) == (v / k) ? o.p_in : o.p_out;
      if (rng.uniform01() < p) edges.emplace_back(u, v);
    }
  }
  return Graph::from_edges(n, edges, std::move(features), o.feature_dim, std::move(labels),
                           std::move(splits), 2);
}

Graph planted_partition_graph(const PlantedOptions& o) {
  const std::uint32_t n = o.num_nodes;
  const std::uint32_t c = o.num_classes;
  if (c < 2 || n < c) throw ConfigError("planted: need at least 2 classes and one node per class");
  if (o.feature_dim < c) throw ConfigError("planted: feature_dim must be >= num_classes");
  if (static_cast<std::uint64_t>(o.train_per_class) * c + o.num_val + o.num_test > n) {
    throw ConfigError("planted: split sizes exceed num_nodes");
  }
  Rng rng(o.seed);

  // Round-robin classes, then shuffle so ids carry no label information.
  std::vector<std::int32_t> labels(n);
  for (std::uint32_t v = 0; v < n; ++v) labels[v] = static_cast<std::int32_t>(v % c);
  rng.shuffle(labels);
  std::vector<std::vector<NodeId>> members(c);
  for (NodeId v = 0; v < n; ++v) members[labels[v]].push_back(v);

  const std::uint32_t block = o.feature_dim / c;
  std::vector<float> features(static_cast<std::size_t>(n) * o.feature_dim, 0.0F);
  for (NodeId v = 0; v < n; ++v) {
    // Word counts vary per node, from a quarter of the mean up to 1.75x.
    const auto lo = std::max<std::uint32_t>(1, o.words_per_node / 4);
    const auto span = 2 * o.words_per_node - 2 * lo + 1;
    const auto words = lo + static_cast<std::uint32_t>(rng.uniform_index(span));
    for (std::uint32_t w = 0; w < words; ++w) {
      std::uint64_t word;
      if (rng.uniform01() < o.topic_share) {
        word = static_cast<std::uint64_t>(labels[v]) * block + rng.uniform_index(block);
      } else {
        word = rng.uniform_index(o.feature_dim);
      }
      features[static_cast<std::size_t>(v) * o.feature_dim + word] = 1.0F;
    }
  }

  const auto m = static_cast<std::uint64_t>(std::llround(o.avg_degree * n / 2.0));
  std::vector<Edge> edges;
  edges.reserve(m);
  for (std::uint64_t e = 0; e < m; ++e) {
    const auto u = static_cast<NodeId>(rng.uniform_index(n));
    NodeId v;
    if (rng.uniform01() < o.homophily) {
      const auto& same = members[labels[u]];
      v = same[rng.uniform_index(same.size())];
    } else {
      v = static_cast<NodeId>(rng.uniform_index(n));
    }
    edges.emplace_back(u, v);
  }

  std::vector<Split> splits(n, Split::none);
  std::vector<std::uint32_t> per_class(c, 0);
  std::vector<NodeId> order(n);
  for (NodeId v = 0; v < n; ++v) order[v] = v;
  rng.shuffle(order);
  std::vector<NodeId> rest;
  for (NodeId v : order) {
    if (per_class[labels[v]] < o.train_per_class) {
      ++per_class[labels[v]];
      splits[v] = Split::train;
    } else {
      rest.push_back(v);
    }
  }
  for (std::size_t i = 0; i < rest.size(); ++i) {
    if (i < o.num_val) splits[rest[i]] = Split::val;
    else if (i < o.num_val + o.num_test) splits[rest[i]] = Split::test;
  }
  return Graph::from_edges(n, edges, std::move(features), o.feature_dim, std::move(labels),
                           std::move(splits), c);
}

}  // namespace meguide
