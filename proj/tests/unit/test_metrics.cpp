#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "fixtures.hpp"
#include "meguide/errors.hpp"
#include "meguide/metrics.hpp"
#include "meguide/parallel.hpp"
#include "meguide/rng.hpp"
#include "meguide/synthetic.hpp"

namespace meguide {
namespace {

using testing::floyd_warshall;
using testing::path_graph;
using testing::random_graph;

// Literal scalar evaluation of the graph smoothness formula.
double scalar_lambda_f(const Graph& g) {
  const std::size_t d = g.feature_dim();
  double total = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    for (NodeId v = 0; v < g.num_nodes(); ++v) {
      double s = 0.0;
      for (NodeId w : g.neighbors(v)) s += static_cast<double>(g.features(v)[k]) - g.features(w)[k];
      total += s * s;
    }
  }
  return total / (static_cast<double>(g.num_edges()) * static_cast<double>(d));
}

// Literal evaluation of the connection failure distance from an all-pairs table.
double oracle_lambda_d(const Graph& g, const std::vector<NodeId>& pool) {
  const auto dist = floyd_warshall(g);
  double sum = 0.0;
  for (NodeId a : pool) {
    std::uint32_t best = 0;
    for (NodeId b : pool) {
      if (a == b || g.label(a) != g.label(b)) continue;
      const auto h = dist[a][b];
      if (h != std::numeric_limits<std::uint32_t>::max()) best = std::max(best, h);
    }
    sum += best;
  }
  return sum / static_cast<double>(pool.size());
}

Graph with_features(const Graph& g, std::vector<float> x, std::size_t d) {
  std::vector<Edge> edges = g.edge_list();
  return Graph::from_edges(g.num_nodes(), edges, std::move(x), d, g.labels(), g.splits(),
                           g.num_classes());
}

TEST(FeatureSmoothness, TwoNodeHandValue) {
  const std::vector<Edge> e{{0, 1}};
  const auto g = Graph::from_edges(2, e, {1.0F, 0.0F}, 1, {0, 0}, {Split::train, Split::train}, 1);
  EXPECT_DOUBLE_EQ(feature_smoothness_graph(g), 2.0);
}

TEST(FeatureSmoothness, Path3HandValue) {
  // Node sums: (1,-1), (-2,1), (1,0); squares sum to 8; |E| d = 4.
  EXPECT_DOUBLE_EQ(feature_smoothness_graph(path3_graph()), 2.0);
}

TEST(FeatureSmoothness, IdenticalFeaturesGiveZero) {
  const auto g = random_graph(30, 0.2, 3, 1);
  const auto flat = with_features(g, std::vector<float>(30 * 3, 0.7F), 3);
  EXPECT_EQ(feature_smoothness_graph(flat), 0.0);
  for (const auto& [u, v] : flat.edge_list()) EXPECT_EQ(feature_smoothness_pair(flat, u, v), 0.0);
}

TEST(FeatureSmoothness, MatchesScalarOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = random_graph(40, 0.15, 5, seed, 3, seed % 2 == 0);
    if (g.num_edges() == 0) continue;
    EXPECT_NEAR(feature_smoothness_graph(g), scalar_lambda_f(g), 1e-12 * (1 + scalar_lambda_f(g)));
  }
}

TEST(FeatureSmoothness, ScalesQuadratically) {
  const auto g = random_graph(30, 0.2, 4, 3);
  std::vector<float> x(g.feature_data().begin(), g.feature_data().end());
  for (auto& v : x) v *= 4.0F;  // power of two keeps float scaling exact
  const auto g4 = with_features(g, x, 4);
  EXPECT_NEAR(feature_smoothness_graph(g4), 16.0 * feature_smoothness_graph(g), 1e-9);
  for (const auto& [u, v] : g.edge_list()) {
    EXPECT_NEAR(feature_smoothness_pair(g4, u, v), 16.0 * feature_smoothness_pair(g, u, v), 1e-9);
  }
}

TEST(FeatureSmoothness, PermutationInvariant) {
  const auto g = random_graph(30, 0.2, 3, 4);
  Rng rng(1);
  std::vector<NodeId> perm(30);
  for (NodeId v = 0; v < 30; ++v) perm[v] = v;
  rng.shuffle(perm);
  std::vector<Edge> edges;
  for (auto [u, v] : g.edge_list()) edges.emplace_back(perm[u], perm[v]);
  std::vector<float> x(30 * 3);
  std::vector<std::int32_t> labels(30);
  std::vector<Split> splits(30);
  for (NodeId v = 0; v < 30; ++v) {
    for (int k = 0; k < 3; ++k) x[perm[v] * 3 + k] = g.features(v)[k];
    labels[perm[v]] = g.label(v);
    splits[perm[v]] = g.split(v);
  }
  const auto p = Graph::from_edges(30, edges, x, 3, labels, splits, 3);
  EXPECT_NEAR(feature_smoothness_graph(p), feature_smoothness_graph(g), 1e-12);
  EXPECT_NEAR(connection_failure_distance(p, p.labeled_nodes()).lambda_d,
              connection_failure_distance(g, g.labeled_nodes()).lambda_d, 1e-12);
}

TEST(FeatureSmoothness, ZeroEdgesUndefined) {
  const auto g = Graph::from_edges(2, std::vector<Edge>{}, {0.0F, 1.0F}, 1, {0, 0},
                                   {Split::train, Split::train}, 1);
  EXPECT_THROW(feature_smoothness_graph(g), UndefinedMetricError);
}

TEST(PairSmoothness, HandValues) {
  const std::vector<Edge> e{{0, 1}};
  const auto g = Graph::from_edges(3, e, {1.0F, 0.0F, 0.0F, 1.0F, 5.0F, 5.0F}, 2, {0, 0, 0},
                                   std::vector<Split>(3, Split::train), 1);
  EXPECT_DOUBLE_EQ(feature_smoothness_pair(g, 0, 1), 1.0);
  EXPECT_DOUBLE_EQ(feature_smoothness_pair(g, 1, 0), 1.0);
  EXPECT_THROW(feature_smoothness_pair(g, 0, 2), PreconditionError);
}

TEST(PairSmoothness, BinaryClosedForm) {
  const std::size_t d = 1433;
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<float> a(d), b(d);
    std::size_t k = 0;
    for (std::size_t j = 0; j < d; ++j) {
      a[j] = (gen() % 10 == 0) ? 1.0F : 0.0F;
      b[j] = (gen() % 10 == 0) ? 1.0F : 0.0F;
      k += a[j] != b[j];
    }
    EXPECT_DOUBLE_EQ(pair_smoothness(a, b), static_cast<double>(k) / 1433.0);
  }
}

TEST(PairSmoothness, SymmetricAndCached) {
  const auto g = random_graph(30, 0.2, 3, 6);
  EdgeSmoothnessCache cache(g);
  for (auto [u, v] : g.edge_list()) {
    EXPECT_EQ(feature_smoothness_pair(g, u, v), feature_smoothness_pair(g, v, u));
    EXPECT_EQ(cache.get(u, v), feature_smoothness_pair(g, u, v));
    EXPECT_EQ(cache.get(v, u), cache.get(u, v));
  }
  EXPECT_EQ(cache.computed(), g.num_edges());
}

TEST(HopDistance, PathAndComponents) {
  const auto p = path_graph(3);
  const std::vector<NodeId> t{2};
  EXPECT_EQ(hop_distance(p, 0, t).at(2), 2u);
  const std::vector<Edge> e{{0, 1}, {2, 3}};
  const auto g = Graph::from_edges(4, e, std::vector<float>(4, 0.0F), 1, {0, 0, 0, 0},
                                   std::vector<Split>(4, Split::train), 1);
  const std::vector<NodeId> t2{1, 3};
  const auto d = hop_distance(g, 0, t2);
  EXPECT_EQ(d.at(1), 1u);
  EXPECT_EQ(d.at(3), kUnreachable);
}

TEST(HopDistance, MatchesFloydWarshall) {
  const auto g = random_graph(100, 0.03, 1, 12);
  const auto fw = floyd_warshall(g);
  for (NodeId s = 0; s < 100; ++s) {
    const auto d = bfs_distances(g, s);
    for (NodeId t = 0; t < 100; ++t) EXPECT_EQ(d[t], fw[s][t]);
  }
}

TEST(HopDistance, TriangleInequality) {
  const auto g = random_graph(60, 0.05, 1, 2);
  std::vector<std::vector<std::uint32_t>> d;
  for (NodeId s = 0; s < 60; ++s) d.push_back(bfs_distances(g, s));
  for (NodeId a = 0; a < 60; ++a)
    for (NodeId b = 0; b < 60; ++b)
      for (NodeId c = 0; c < 60; ++c)
        if (d[a][b] != kUnreachable && d[b][c] != kUnreachable) {
          EXPECT_LE(d[a][c], d[a][b] + d[b][c]);
        }
}

TEST(ConnectionFailureDistance, HandValues) {
  const auto p = path_graph(4);
  const std::vector<NodeId> all{0, 1, 2, 3};
  EXPECT_DOUBLE_EQ(connection_failure_distance(p, all).lambda_d, 2.5);
  const std::vector<NodeId> one{2};
  EXPECT_DOUBLE_EQ(connection_failure_distance(p, one).lambda_d, 0.0);
  EXPECT_THROW(connection_failure_distance(p, std::vector<NodeId>{}), EmptyInputError);
}

TEST(ConnectionFailureDistance, UnlabeledPoolNodeRejected) {
  const std::vector<Edge> e{{0, 1}};
  const auto g = Graph::from_edges(2, e, {0.0F, 1.0F}, 1, {0, kUnlabeled}, {Split::train, Split::none}, 1);
  EXPECT_THROW(connection_failure_distance(g, std::vector<NodeId>{0, 1}), PreconditionError);
}

TEST(ConnectionFailureDistance, MatchesAllPairsOracle) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const auto g = random_graph(60, 0.04, 1, seed, 3);
    const auto pool = g.nodes_in(Split::train);
    EXPECT_NEAR(connection_failure_distance(g, pool).lambda_d, oracle_lambda_d(g, pool), 1e-12);
    const auto all = g.labeled_nodes();
    const auto r = connection_failure_distance(g, all);
    EXPECT_NEAR(r.lambda_d, oracle_lambda_d(g, all), 1e-12);
    EXPECT_EQ(r.num_sources_used, all.size());
  }
}

TEST(ConnectionFailureDistance, PoolSumMonotoneAsSingleClassPoolGrows) {
  const auto g = random_graph(60, 0.08, 1, 21, 1);
  const auto d0 = bfs_distances(g, 0);
  ASSERT_EQ(std::count(d0.begin(), d0.end(), kUnreachable), 0) << "fixture must be connected";
  Rng rng(4);
  std::vector<NodeId> order(60);
  for (NodeId v = 0; v < 60; ++v) order[v] = v;
  rng.shuffle(order);
  std::vector<NodeId> pool;
  double prev_sum = 0.0;
  for (NodeId v : order) {
    pool.push_back(v);
    const double sum = connection_failure_distance(g, pool).lambda_d * static_cast<double>(pool.size());
    EXPECT_GE(sum + 1e-9, prev_sum);
    prev_sum = sum;
  }
}

TEST(ConnectionFailureDistance, MeanCanDropWhenACentralNodeJoins) {
  const auto p = path_graph(5);
  EXPECT_DOUBLE_EQ(connection_failure_distance(p, std::vector<NodeId>{0, 4}).lambda_d, 4.0);
  EXPECT_NEAR(connection_failure_distance(p, std::vector<NodeId>{0, 4, 2}).lambda_d, 10.0 / 3.0, 1e-12);
}

TEST(ConnectionFailureDistance, PoolCapSubsamples) {
  const auto g = random_graph(120, 0.05, 1, 5, 2);
  const auto pool = g.labeled_nodes();
  CfdOptions opts;
  opts.pool_cap = 50;
  opts.seed = 9;
  const auto a = connection_failure_distance(g, pool, opts);
  const auto b = connection_failure_distance(g, pool, opts);
  EXPECT_EQ(a.num_sources_used, 50u);
  EXPECT_EQ(a.lambda_d, b.lambda_d);
}

TEST(ConnectionFailureDistance, ThreadCountInvariant) {
  const auto g = random_graph(150, 0.03, 1, 8, 4);
  const auto pool = g.labeled_nodes();
  set_num_threads(1);
  const double one = connection_failure_distance(g, pool).lambda_d;
  set_num_threads(4);
  const double four = connection_failure_distance(g, pool).lambda_d;
  set_num_threads(0);
  EXPECT_NEAR(one, four, 1e-9);
}

TEST(ComputeMetrics, PoolKindsAndEdgeSmoothness) {
  const auto g = random_graph(45, 0.1, 3, 2);
  MetricsOptions opts;
  opts.emit_edge_smoothness = true;
  const auto train = compute_metrics(g, opts);
  EXPECT_EQ(train.num_sources_used, g.nodes_in(Split::train).size());
  EXPECT_EQ(train.lambda_d_mode, CfdMode::estimated);
  ASSERT_TRUE(train.edge_smoothness.has_value());
  EXPECT_EQ(train.edge_smoothness->size(), g.num_edges());
  opts.pool = PoolKind::all_labeled;
  const auto all = compute_metrics(g, opts);
  EXPECT_EQ(all.num_sources_used, g.labeled_nodes().size());
  EXPECT_EQ(all.lambda_d_mode, CfdMode::exact);
  EXPECT_EQ(all.lambda_f, train.lambda_f);
}

TEST(HopBuckets, CompleteGraphSameLabel) {
  std::vector<Edge> e;
  for (NodeId a = 0; a < 6; ++a)
    for (NodeId b = a + 1; b < 6; ++b) e.emplace_back(a, b);
  const auto g = Graph::from_edges(6, e, std::vector<float>(6, 0.0F), 1, std::vector<std::int32_t>(6, 0),
                                   std::vector<Split>(6, Split::train), 1);
  const std::vector<NodeId> pool{0, 1, 2, 3, 4, 5};
  const auto buckets = theorem2_property_check(g, pool);
  ASSERT_EQ(buckets.size(), 1u);
  EXPECT_EQ(buckets[0].hop, 1u);
  EXPECT_EQ(buckets[0].total_pairs, 15u);
  EXPECT_DOUBLE_EQ(buckets[0].fraction(), 1.0);
}

TEST(HopBuckets, BucketsMatchDirectCount) {
  const auto g = random_graph(50, 0.06, 1, 3, 3);
  const auto pool = g.labeled_nodes();
  const auto fw = floyd_warshall(g);
  std::map<std::uint32_t, std::pair<std::uint64_t, std::uint64_t>> want;
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      const auto h = fw[pool[i]][pool[j]];
      if (h == std::numeric_limits<std::uint32_t>::max()) continue;
      want[h].second++;
      if (g.label(pool[i]) == g.label(pool[j])) want[h].first++;
    }
  const auto got = theorem2_property_check(g, pool);
  ASSERT_EQ(got.size(), want.size());
  for (const auto& b : got) {
    EXPECT_EQ(b.same_label_pairs, want[b.hop].first);
    EXPECT_EQ(b.total_pairs, want[b.hop].second);
  }
}

TEST(SmoothnessGap, GapStatisticSign) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    TwoClusterOptions o;
    o.nodes_per_cluster = 100;
    o.gap = 1.0;
    o.noise = 0.1;
    o.seed = seed;
    const auto g = two_cluster_graph(o);
    std::vector<int> cluster(g.labels().begin(), g.labels().end());
    EXPECT_GT(smoothness_gap_statistic(g, cluster), 0.0);
  }
}

TEST(SmoothnessGap, GapStatisticDirect) {
  const auto g = random_graph(40, 0.15, 2, 4, 2);
  std::vector<int> cluster(g.labels().begin(), g.labels().end());
  double inter = 0, intra = 0;
  int ni = 0, na = 0;
  for (auto [u, v] : g.edge_list()) {
    const double s = pair_smoothness(g.features(u), g.features(v));
    if (cluster[u] != cluster[v]) {
      inter += s;
      ++ni;
    } else {
      intra += s;
      ++na;
    }
  }
  EXPECT_NEAR(smoothness_gap_statistic(g, cluster), inter / ni - intra / na, 1e-12);
}

}  // namespace
}  // namespace meguide
