#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meguide/graph.hpp"
#include "meguide/rng.hpp"

namespace meguide {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// D^-1/2 (A + I) D^-1/2 over a subgraph's local ids, stored as CSR with the
// diagonal included.
struct NormalizedAdjacency {
  std::uint32_t n = 0;
  std::vector<std::uint32_t> row_offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> values;

  // Returns this * x.
  Matrix multiply(const Matrix& x) const;
  double at(std::uint32_t i, std::uint32_t j) const;
};

NormalizedAdjacency normalize_adjacency(const Subgraph& sub);
NormalizedAdjacency normalize_adjacency(std::uint32_t n,
                                        std::span<const std::pair<std::uint32_t, std::uint32_t>> edges);
// Whole-graph operator, used only for the full-graph ablation.
NormalizedAdjacency normalize_adjacency(const Graph& g);

// Process-wide instrumentation of adjacency construction.
struct AdjacencyCounters {
  std::uint64_t builds = 0;
  std::uint64_t largest_nodes = 0;
  std::uint64_t last_nodes = 0;
};
AdjacencyCounters adjacency_counters();
void reset_adjacency_counters();

// Two-layer GCN without biases: logits = A relu(A drop(X) W0) drop W1.
struct GcnModel {
  Matrix w0;  // d x h
  Matrix w1;  // h x c
  double dropout = 0.5;

  std::size_t input_dim() const { return static_cast<std::size_t>(w0.rows()); }
  std::size_t hidden_dim() const { return static_cast<std::size_t>(w0.cols()); }
  std::size_t num_classes() const { return static_cast<std::size_t>(w1.cols()); }

  // Glorot-uniform initialisation.
  static GcnModel glorot(std::size_t d, std::size_t h, std::size_t c, double dropout, Rng& rng);
  static GcnModel zeros(std::size_t d, std::size_t h, std::size_t c, double dropout);

  void check_finite() const;
  friend bool operator==(const GcnModel&, const GcnModel&) = default;
};

// Features of the subgraph's nodes in local order.
Matrix gather_features(const Graph& g, std::span<const NodeId> nodes);

struct ForwardCache {
  Matrix x_in;      // input after dropout
  Matrix z1;        // A x_in W0
  Matrix h_mask;    // hidden dropout scale (1/(1-p) or 0); empty in eval mode
  Matrix h_in;      // relu(z1) after dropout
};

struct ForwardResult {
  Matrix logits;
  ForwardCache cache;
};

// Inverted dropout is applied to the input and hidden activations only in
// train mode, which then requires rng.
ForwardResult forward(const GcnModel& model, const NormalizedAdjacency& adj, const Matrix& x,
                      bool train_mode, Rng* rng = nullptr);

struct LossAndGrads {
  double loss = 0.0;
  double data_loss = 0.0;
  Matrix grad_w0;
  Matrix grad_w1;
  std::size_t num_labeled = 0;
};

// Mean softmax cross-entropy over train-masked labeled rows plus
// (weight_decay / 2)(|W0|^2 + |W1|^2). Returns nullopt (skip) when no row
// qualifies.
std::optional<LossAndGrads> loss_and_grads(const GcnModel& model, const NormalizedAdjacency& adj,
                                           const Matrix& x, std::span<const std::int32_t> labels,
                                           std::span<const std::uint8_t> train_mask,
                                           double weight_decay, bool train_mode,
                                           Rng* rng = nullptr);

// Hidden-layer representation A relu(A X W0), eval mode.
Matrix node_representations(const GcnModel& model, const NormalizedAdjacency& adj,
                            const Matrix& x);

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First and second moments for one parameter matrix.
struct AdamMoments {
  Matrix m;
  Matrix v;
};

// In-place Adam update with bias correction; t is the 1-based step count.
// Throws NumericError on a non-finite gradient.
void adam_update(Matrix& param, AdamMoments& moments, const Matrix& grad, std::uint64_t t,
                 const AdamConfig& cfg, const char* name = "parameter");

struct AdamState {
  AdamMoments w0;
  AdamMoments w1;
  std::uint64_t t = 0;

  static AdamState for_model(const GcnModel& model);
};

void adam_step(GcnModel& model, AdamState& state, const Matrix& grad_w0, const Matrix& grad_w1,
               const AdamConfig& cfg);

// Checkpoint: one JSON header line, then W0 and W1 as little-endian f64 in
// row-major order.
struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::string config_hash;
};
void save_checkpoint(const GcnModel& model, const CheckpointMeta& meta,
                     const std::filesystem::path& file);
GcnModel load_checkpoint(const std::filesystem::path& file, CheckpointMeta* meta = nullptr);

}  // namespace meguide
