#pragma once

#include <cstdint>

#include "meguide/graph.hpp"

namespace meguide {

// 0 - 1 - 2 with 2-d features, labels 0 1 0, node 0 train, 1 val, 2 test.
Graph path3_graph();
// Triangle 0 1 2 with 2-d features, labels 0 0 1, all train.
Graph triangle_graph();

struct TwoClusterOptions {
  std::uint32_t nodes_per_cluster = 50;
  std::uint32_t feature_dim = 16;
  double p_in = 0.1;    // edge probability inside a cluster
  double p_out = 0.02;  // edge probability across clusters
  double gap = 1.0;     // cluster 1 mean is gap on every feature, cluster 0 mean is 0
  double noise = 1.0;   // feature standard deviation
  double train_fraction = 0.2;
  std::uint64_t seed = 0;
};

// Two Gaussian feature clusters with a stochastic block structure. Labels are
// the cluster ids; the first train_fraction of each cluster is train, the next
// equal share val, the rest test.
Graph two_cluster_graph(const TwoClusterOptions& opts);

struct PlantedOptions {
  std::uint32_t num_nodes = 700;
  std::uint32_t num_classes = 7;
  std::uint32_t feature_dim = 280;
  double avg_degree = 4.0;
  double homophily = 0.8;        // share of edges inside a class
  std::uint32_t words_per_node = 12;  // mean; drawn per node
  double topic_share = 0.6;      // share of a node's words drawn from its class block
  std::uint32_t train_per_class = 20;
  std::uint32_t num_val = 140;
  std::uint32_t num_test = 280;
  std::uint64_t seed = 0;
};

// Citation-like planted partition: homophilous edges and sparse binary
// bag-of-words features with one word block per class.
Graph planted_partition_graph(const PlantedOptions& opts);

}  // namespace meguide
