#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "meguide/gcn.hpp"
#include "meguide/graph.hpp"
#include "meguide/metrics.hpp"
#include "meguide/prediction.hpp"
#include "meguide/samplers.hpp"

namespace meguide {

struct TrainConfig {
  std::uint32_t M = 32;
  std::uint32_t iterations = 400;
  double rho = 0.3;
  SamplerKind sampler = SamplerKind::meguide;
  double lr = 0.01;
  double weight_decay = 5e-4;
  double dropout = 0.5;
  std::uint32_t hidden = 32;
  std::uint32_t patience = 50;  // evaluations without improvement
  std::uint32_t eval_every = 5;
  std::uint64_t seed = 0;
  std::uint32_t min_size = 2;
  std::uint32_t max_root_retries = 10;
  std::uint32_t max_steps = 0;
  EdgeMode edge_mode = EdgeMode::expansion;
  bool all_roots = false;
  std::uint32_t target_size = 100;  // random / bfs samplers
  std::uint32_t pool_cap = 2000;
  std::uint32_t resample_every = 0;  // epochs; 0 keeps the batch set fixed
  bool normalize_features = true;    // row-normalise the GCN input
  std::uint32_t predictor_epochs = 300;
  double predictor_lr = 0.01;
  double predictor_weight_decay = 5e-4;
  bool predictor_bias = true;
  bool full_graph_ablation = false;

  void validate() const;
  SamplerConfig sampler_config() const;
  PredictorConfig predictor_config() const;

  // Flat JSON mirror; unknown keys are rejected.
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  // FNV-1a over the key-sorted JSON dump, as 16 hex digits.
  std::string hash() const;
};

struct BatchSet {
  std::vector<Subgraph> subgraphs;
  double lambda_f = 0.0;
  double lambda_d = 0.0;
  std::size_t num_sources_used = 0;
  std::uint32_t steps = 0;  // expansion budget handed to the sampler
};

// Metrics for the batch sampler: lambda_f over the graph and lambda_d over
// the train pool.
MetricsReport training_metrics(const Graph& g, const TrainConfig& cfg);

// Samples M subgraphs; subgraph k uses seed cfg.seed + k (k = 1..M).
BatchSet build_batch_set(const EdgeSmoothnessCache& cache, const MetricsReport& metrics,
                         const TrainConfig& cfg);
BatchSet build_batch_set(const Graph& g, const TrainConfig& cfg);

nlohmann::json batch_manifest(const BatchSet& batch, const TrainConfig& cfg);

struct CurvePoint {
  std::uint64_t iteration = 0;
  double loss = 0.0;
  std::optional<double> val_acc;
};

struct RunReport {
  double test_accuracy = 0.0;
  double best_val_accuracy = 0.0;
  std::uint64_t best_iteration = 0;
  double convergence_seconds = 0.0;
  double total_seconds = 0.0;
  std::uint64_t iterations = 0;
  std::uint64_t epochs = 0;
  std::uint64_t skipped_batches = 0;
  double lambda_f = 0.0;
  double lambda_d = 0.0;
  std::size_t num_sources_used = 0;
  std::uint32_t expansion_steps = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string stop_reason;
  std::vector<std::string> warnings;
  std::size_t max_subgraph_nodes = 0;
  std::uint64_t max_iteration_adjacency_nodes = 0;
  std::uint64_t max_iteration_adjacency_builds = 0;
  std::size_t extras_count = 0;
  std::optional<double> full_graph_test_accuracy;
  std::vector<CurvePoint> curve;

  // Wall-time fields are the only nondeterministic entries.
  nlohmann::json to_json(bool include_timing = true) const;
};

struct TrainResult {
  GcnModel model;
  BatchSet batch;
  RunReport report;
  TestSubgraphSet test_set;
};

// Subgraph mini-batch training with Adam on the full weights, early stopping
// on the fast validation path, then aggregation-based test prediction.
TrainResult train(const Graph& g, const TrainConfig& cfg);

struct PredictionRun {
  TestSubgraphSet test_set;
  PredictorHead head;
  Predictions predictions;  // every node of `targets`
};

// Aggregation-based prediction with a trained model: extends the batch set to
// cover every node, aggregates, fits a head on train nodes and predicts
// `targets` (all nodes when empty). `g` carries the raw features; the model
// input is row-normalised when cfg.normalize_features is set.
PredictionRun run_prediction(const Graph& g, const GcnModel& model, const BatchSet& batch,
                             const TrainConfig& cfg, std::span<const NodeId> targets = {});

struct SweepEntry {
  double rho = 0.0;
  RunReport report;
};

std::vector<SweepEntry> rho_sweep(const Graph& g, const std::vector<double>& rhos,
                                  const TrainConfig& base);

}  // namespace meguide
