#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "meguide/gcn.hpp"
#include "meguide/graph.hpp"
#include "meguide/metrics.hpp"
#include "meguide/samplers.hpp"

namespace meguide {

// Batch set plus extra subgraphs rooted at nodes the batch set missed.
struct TestSubgraphSet {
  std::vector<Subgraph> subgraphs;  // batch subgraphs first, then extras
  std::size_t batch_count = 0;
  std::size_t extras_count = 0;
  // coverage[v]: (subgraph index, local id) for every subgraph holding v.
  std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> coverage;

  bool covers(NodeId v) const { return v < coverage.size() && !coverage[v].empty(); }
};

// Membership lists for every node of g across the given subgraphs.
std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> compute_coverage(
    std::size_t num_nodes, std::span<const Subgraph> subgraphs);

// Covers every node of `targets` (all nodes when empty). Uncovered nodes, in
// ascending id order, become roots of extra samples using the sampler's
// threshold and step budget (MeGuide) or BFS of target_size (baselines).
TestSubgraphSet build_test_set(const EdgeSmoothnessCache& cache, std::span<const Subgraph> batch,
                               double lambda_d, double lambda_f, const SamplerConfig& cfg,
                               std::span<const NodeId> targets = {});

struct AggregatedRepresentations {
  Matrix h;                          // one row per covered node
  std::vector<NodeId> nodes;         // global id of each row, ascending
  std::vector<std::int64_t> row_of;  // global id -> row, -1 when uncovered

  std::int64_t row(NodeId v) const { return v < row_of.size() ? row_of[v] : -1; }
};

// Mean over subgraphs of each node's hidden representation. `g` supplies the
// features fed to the model.
AggregatedRepresentations aggregate_representations(const GcnModel& model,
                                                    std::span<const Subgraph> subgraphs,
                                                    const Graph& g);

struct PredictorHead {
  Matrix w;      // h x c
  RowVector b;   // 1 x c, empty without bias

  bool has_bias() const { return b.size() != 0; }
  void check_finite() const;
};

struct PredictorConfig {
  double lr = 0.01;
  double weight_decay = 5e-4;
  std::uint32_t epochs = 300;
  bool bias = true;
};

struct HeadGrads {
  double loss = 0.0;
  Matrix grad_w;
  RowVector grad_b;
};

// Mean cross-entropy of softmax(x w + b) over labeled rows plus
// (weight_decay / 2)|w|^2.
HeadGrads head_loss_and_grads(const PredictorHead& head, const Matrix& x,
                              std::span<const std::int32_t> labels, double weight_decay);

// Zero-initialised softmax regression trained full-batch with Adam on the
// aggregated rows of train-masked nodes.
PredictorHead train_predictor(const AggregatedRepresentations& reps, const Graph& g,
                              const PredictorConfig& cfg);

struct Predictions {
  std::vector<NodeId> nodes;
  std::vector<std::int32_t> labels;
  Matrix probabilities;
};

// Argmax of softmax(h w + b); ties go to the lowest class index.
Predictions predict(const PredictorHead& head, const AggregatedRepresentations& reps,
                    std::span<const NodeId> nodes);

// Fraction of `nodes` whose prediction matches the graph label.
double accuracy(const Predictions& p, const Graph& g);

struct ValidationResult {
  double accuracy = 0.0;
  std::size_t covered = 0;
  std::size_t total = 0;
  bool flagged = false;  // nothing covered; accuracy is the 0 sentinel
};

// Cheap mid-training check: aggregate over the batch set only and score the
// covered nodes of `split` with the model's second layer as the head.
ValidationResult fast_validation_path(const GcnModel& model, std::span<const Subgraph> batch,
                                      const Graph& g, Split split = Split::val);

// Accuracy of the model run on the whole graph, scored on `split`.
double full_graph_accuracy(const GcnModel& model, const Graph& g, Split split = Split::test);

}  // namespace meguide
